//! Rotation economics: single-rotation revenues, the land-value function
//! under exponentially distributed damage arrivals, and the first-order
//! condition for the optimal rotation length.
//!
//! Revenue conventions, with discount rate `r`, carbon price `P_c`, carbon
//! content `alpha` and stem volume `v(t)`:
//!
//! * growing stands earn `alpha P_c` per unit of volume increment,
//!   discounted continuously;
//! * a damage event at age `t` charges the released carbon
//!   `(1 - gamma) alpha P_c v(t)`, pays the regeneration cost `R`, and
//!   recovers `delta P_f(t) v(t)` of salvage value;
//! * a harvest at age `T` earns `P_f(T) v(T)` for the timber, charges the
//!   released carbon `(1 - beta) alpha P_c v(T)` and pays `R`.
//!
//! Salvage is carried as an explicit term rather than folded into gamma, so
//! that `P_c = 0` needs no special-casing; with a constant price schedule the
//! two formulations agree exactly (see the substitution test).

use serde::{Deserialize, Serialize};

use crate::carbon::CarbonParams;
use crate::error::{ModelError, Result};
use crate::growth::{GrowthCurve, PriceSchedule};
use crate::quad;

/// Smallest rotation length for which the land-value divisor is evaluated.
pub const MIN_ROTATION_YEARS: f64 = 1e-6;

/// Economic environment shared by all rotations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconomicEnv {
    /// Carbon price (euros/t_CO2).
    pub carbon_price: f64,
    /// Discount rate (1/yr).
    pub discount_rate: f64,
    /// Regeneration cost paid at the end of each rotation (euros/ha).
    pub regeneration_cost: f64,
    /// Fraction of the timber value salvageable after damage.
    pub salvage_fraction: f64,
}

impl EconomicEnv {
    pub fn new(
        carbon_price: f64,
        discount_rate: f64,
        regeneration_cost: f64,
        salvage_fraction: f64,
    ) -> Result<Self> {
        let env = EconomicEnv {
            carbon_price,
            discount_rate,
            regeneration_cost,
            salvage_fraction,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.discount_rate.is_finite() && self.discount_rate > 0.0) {
            return Err(ModelError::invalid(
                "discount_rate",
                "must be finite and > 0",
            ));
        }
        if !(self.carbon_price.is_finite() && self.carbon_price >= 0.0) {
            return Err(ModelError::invalid(
                "carbon_price",
                "must be finite and >= 0",
            ));
        }
        if !(self.regeneration_cost.is_finite() && self.regeneration_cost >= 0.0) {
            return Err(ModelError::invalid(
                "regeneration_cost",
                "must be finite and >= 0",
            ));
        }
        if !(self.salvage_fraction.is_finite() && (0.0..=1.0).contains(&self.salvage_fraction)) {
            return Err(ModelError::invalid(
                "salvage_fraction",
                "must lie in [0, 1]",
            ));
        }
        Ok(())
    }
}

/// A complete rotation problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationProblem {
    pub growth: GrowthCurve,
    pub price: PriceSchedule,
    pub carbon: CarbonParams,
    pub econ: EconomicEnv,
    /// Average damage arrivals per year (the exponential rate).
    pub damage_rate: f64,
}

impl RotationProblem {
    pub fn new(
        growth: GrowthCurve,
        price: PriceSchedule,
        carbon: CarbonParams,
        econ: EconomicEnv,
        damage_rate: f64,
    ) -> Result<Self> {
        let problem = RotationProblem {
            growth,
            price,
            carbon,
            econ,
            damage_rate,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        self.price.validate()?;
        self.carbon.validate()?;
        self.econ.validate()?;
        if !(self.damage_rate.is_finite() && self.damage_rate >= 0.0) {
            return Err(ModelError::invalid(
                "damage_rate",
                "must be finite and >= 0",
            ));
        }
        // The closed-form discounted integral must converge at this rate.
        self.growth
            .discounted_increment_integral(0.0, self.econ.discount_rate)?;
        Ok(())
    }

    /// Net present revenue of a rotation destroyed by damage at age `t`.
    pub fn damage_revenue(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(ModelError::domain(
                "damage_revenue",
                "damage age must be finite and >= 0",
            ));
        }
        Ok(self.damage_revenue_unchecked(t))
    }

    /// Net present revenue of a rotation harvested at age `t`.
    pub fn harvest_revenue(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t <= 0.0 {
            return Err(ModelError::domain(
                "harvest_revenue",
                "rotation length must be finite and > 0",
            ));
        }
        Ok(self.harvest_revenue_unchecked(t))
    }

    pub(crate) fn damage_revenue_unchecked(&self, t: f64) -> f64 {
        let r = self.econ.discount_rate;
        let p_c = self.econ.carbon_price;
        let alpha = self.carbon.alpha;
        let volume = self.growth.volume_unchecked(t);
        let discount = (-r * t).exp();
        let carbon_income = alpha * p_c * self.growth.discounted_increment_unchecked(t, r);
        let release_charge = (1.0 - self.carbon.gamma) * alpha * p_c * volume;
        let salvage = self.econ.salvage_fraction * self.price.price_unchecked(t) * volume;
        carbon_income - discount * (release_charge + self.econ.regeneration_cost)
            + discount * salvage
    }

    pub(crate) fn harvest_revenue_unchecked(&self, t: f64) -> f64 {
        let r = self.econ.discount_rate;
        let p_c = self.econ.carbon_price;
        let alpha = self.carbon.alpha;
        let volume = self.growth.volume_unchecked(t);
        let discount = (-r * t).exp();
        let carbon_income = alpha * p_c * self.growth.discounted_increment_unchecked(t, r);
        let net_fell = (self.price.price_unchecked(t) - (1.0 - self.carbon.beta) * alpha * p_c)
            * volume
            - self.econ.regeneration_cost;
        carbon_income + discount * net_fell
    }

    /// Expected damage revenue over one rotation of length `t_end`:
    /// `\int_0^{t_end} D(t) lambda e^{-lambda t} dt`.
    pub(crate) fn expected_damage_npv(&self, t_end: f64) -> Result<f64> {
        let lambda = self.damage_rate;
        if lambda == 0.0 || t_end == 0.0 {
            return Ok(0.0);
        }
        let tol = 1e-10
            * self
                .harvest_revenue_unchecked(t_end.max(1.0))
                .abs()
                .max(1.0);
        quad::integrate(
            |t| self.damage_revenue_unchecked(t) * lambda * (-lambda * t).exp(),
            0.0,
            t_end,
            tol,
        )
    }

    /// Land expectation value for rotation length `t`: the expected net
    /// present value of an infinite chain of rotations starting from bare
    /// land, each ended by damage or by harvest at age `t`.
    pub fn land_value(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t <= 0.0 {
            return Err(ModelError::domain(
                "land_value",
                "rotation length must be finite and > 0",
            ));
        }
        if t < MIN_ROTATION_YEARS {
            return Err(ModelError::Numerical {
                op: "land_value",
                reason: format!(
                    "divisor underflows for rotation length {t} < {MIN_ROTATION_YEARS}"
                ),
            });
        }
        let lambda = self.damage_rate;
        let r = self.econ.discount_rate;
        let numerator =
            self.expected_damage_npv(t)? + self.harvest_revenue_unchecked(t) * (-lambda * t).exp();
        let divisor = r / (lambda + r) * (1.0 - (-(lambda + r) * t).exp());
        let value = numerator / divisor;
        if !value.is_finite() {
            return Err(ModelError::Numerical {
                op: "land_value",
                reason: format!("non-finite land value at rotation length {t}"),
            });
        }
        Ok(value)
    }

    /// Land expectation value of never harvesting.
    ///
    /// With damage risk the rotation chain is still renewed by damage events;
    /// without it the stand simply grows forever and only the carbon annuity
    /// remains.
    pub fn land_value_infinite(&self) -> Result<f64> {
        let lambda = self.damage_rate;
        let r = self.econ.discount_rate;
        let alpha_pc = self.carbon.alpha * self.econ.carbon_price;
        let w_inf = self.growth.discounted_increment_to_infinity(r)?;
        if lambda == 0.0 {
            return Ok(alpha_pc * w_inf);
        }
        // Beyond t_cut every e^{-r t} term in D(t) is dead and
        // D(t) = alpha P_c W(inf) to machine precision.
        let t_cut = (35.0 / r).max(1500.0);
        let head = quad::integrate(
            |t| self.damage_revenue_unchecked(t) * lambda * (-lambda * t).exp(),
            0.0,
            t_cut,
            1e-10 * (alpha_pc * w_inf).abs().max(1.0),
        )?;
        let tail = alpha_pc * w_inf * (-lambda * t_cut).exp();
        Ok((head + tail) / (r / (lambda + r)))
    }

    /// Normalization scale for the first-order-condition residual:
    /// `(lambda + r) (alpha P_c + P_f_max) v(t)`, floored away from zero.
    pub fn foc_scale(&self, t: f64) -> f64 {
        let r = self.econ.discount_rate;
        let price_scale = self.carbon.alpha * self.econ.carbon_price + self.price.max_price();
        let scale = (self.damage_rate + r) * price_scale * self.growth.volume_unchecked(t.max(0.0));
        scale.abs().max(1e-12)
    }

    /// Normalized first-order-condition residual at rotation length `t`.
    ///
    /// This is the stationarity expression obtained by differentiating the
    /// land-value function and clearing its denominator; it shares the sign
    /// of `d/dt land_value` and crosses zero at interior optima. The raw
    /// residual is divided by [`RotationProblem::foc_scale`] so tolerances
    /// are comparable across parameterizations.
    pub fn foc_residual(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t <= 0.0 {
            return Err(ModelError::domain(
                "foc_residual",
                "rotation length must be finite and > 0",
            ));
        }
        Ok(self.foc_residual_raw(t)? / self.foc_scale(t))
    }

    /// Unnormalized first-order-condition expression (euros/ha/yr scale).
    ///
    /// Term arrangement, with `E = e^{-(lambda + r) t}` and pure carbon
    /// retention `gamma`:
    ///
    /// ```text
    ///   [ (1 - E) (P_f'(t) + lambda delta P_f(t)) - (lambda + r) P_f(t)
    ///     - alpha P_c (r (beta - 1) + lambda (beta - gamma) - lambda (1 - gamma) E) ] v(t)
    /// + (1 - E) (alpha beta P_c + P_f(t)) v'(t)
    /// - alpha P_c (lambda + r) e^{-lambda t} \int_0^t e^{-r tau} v'(tau) dtau
    /// - (lambda + r) \int_0^t lambda e^{-lambda s} D(s) ds
    /// + (r + lambda E) R
    /// ```
    ///
    /// The `lambda delta P_f(t)` piece extends the salvage-free form: it is
    /// what the explicit salvage term in `D` contributes to the derivative,
    /// and vanishes when `delta = 0`.
    pub fn foc_residual_raw(&self, t: f64) -> Result<f64> {
        let lambda = self.damage_rate;
        let r = self.econ.discount_rate;
        let alpha = self.carbon.alpha;
        let p_c = self.econ.carbon_price;
        let beta = self.carbon.beta;
        let gamma = self.carbon.gamma;
        let delta = self.econ.salvage_fraction;
        let regen = self.econ.regeneration_cost;

        let volume = self.growth.volume_unchecked(t);
        let increment = self.growth.increment_unchecked(t);
        let price = self.price.price_unchecked(t);
        let price_slope = self.price.price_derivative_unchecked(t);
        let discounted_growth = self.growth.discounted_increment_unchecked(t, r);
        let e = (-(lambda + r) * t).exp();

        let volume_coeff = (1.0 - e) * (price_slope + lambda * delta * price)
            - (lambda + r) * price
            - alpha
                * p_c
                * (r * (beta - 1.0) + lambda * (beta - gamma) - lambda * (1.0 - gamma) * e);

        let residual = volume_coeff * volume + (1.0 - e) * (alpha * beta * p_c + price) * increment
            - alpha * p_c * (lambda + r) * (-lambda * t).exp() * discounted_growth
            - (lambda + r) * self.expected_damage_npv(t)?
            + (r + lambda * e) * regen;
        Ok(residual)
    }

    /// Centered finite-difference derivative of the land value.
    pub fn land_value_derivative(&self, t: f64, step: f64) -> Result<f64> {
        let lo = (t - step).max(MIN_ROTATION_YEARS * 2.0);
        let hi = t + step;
        Ok((self.land_value(hi)? - self.land_value(lo)?) / (hi - lo))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species::{DamageKind, SpeciesParams};

    pub(crate) fn problem(
        species: &SpeciesParams,
        damage: DamageKind,
        price: PriceSchedule,
        carbon_price: f64,
        lambda: f64,
        regen: f64,
        salvage: f64,
    ) -> RotationProblem {
        let econ = EconomicEnv::new(carbon_price, 0.03, regen, salvage).unwrap();
        let carbon = species.carbon_params(damage, econ.discount_rate).unwrap();
        RotationProblem::new(species.growth, price, carbon, econ, lambda).unwrap()
    }

    fn pine_fire(carbon_price: f64, lambda: f64) -> RotationProblem {
        problem(
            &SpeciesParams::scots_pine(),
            DamageKind::Fire,
            PriceSchedule::default_age_dependent(),
            carbon_price,
            lambda,
            0.0,
            0.0,
        )
    }

    #[test]
    fn damage_revenue_reduces_to_regeneration_cost() {
        // With no carbon price and no salvage, only the regeneration cost
        // survives in D(t).
        let mut p = pine_fire(0.0, 0.005);
        p.econ.regeneration_cost = 800.0;
        for t in [0.0_f64, 20.0, 75.0] {
            let expected = -(-0.03 * t).exp() * 800.0;
            let got = p.damage_revenue(t).unwrap();
            assert!((got - expected).abs() < 1e-9, "t={t}: {got} vs {expected}");
        }
    }

    #[test]
    fn damage_revenue_at_age_zero_is_minus_regen() {
        let mut p = pine_fire(50.0, 0.005);
        p.econ.regeneration_cost = 500.0;
        p.econ.salvage_fraction = 0.4;
        assert!((p.damage_revenue(0.0).unwrap() + 500.0).abs() < 1e-12);
    }

    #[test]
    fn harvest_revenue_is_faustmann_payoff_without_carbon() {
        let species = SpeciesParams::scots_pine();
        let p = problem(
            &species,
            DamageKind::Fire,
            PriceSchedule::constant(60.0),
            0.0,
            0.0,
            1000.0,
            0.0,
        );
        for t in [30.0, 60.0, 95.0] {
            let v = species.growth.volume(t).unwrap();
            let expected = (-0.03 * t).exp() * (60.0 * v - 1000.0);
            let got = p.harvest_revenue(t).unwrap();
            assert!(
                ((got - expected) / expected).abs() < 1e-12,
                "t={t}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn harvest_revenue_approaches_minus_regen_at_zero() {
        let mut p = pine_fire(25.0, 0.0);
        p.econ.regeneration_cost = 300.0;
        let got = p.harvest_revenue(1e-9).unwrap();
        assert!((got + 300.0).abs() < 1e-6, "got {got}");
    }

    #[test]
    fn land_value_rejects_tiny_rotations() {
        let p = pine_fire(0.0, 0.0);
        assert!(p.land_value(1e-8).is_err());
        assert!(p.land_value(0.0).is_err());
        assert!(p.land_value(-3.0).is_err());
        assert!(p.land_value(f64::INFINITY).is_err());
    }

    #[test]
    fn land_value_matches_faustmann_formula_without_damage() {
        // Independent implementation of the classical bare-land value with
        // the regeneration cost charged at each felling.
        let species = SpeciesParams::scots_pine();
        let p = problem(
            &species,
            DamageKind::Fire,
            PriceSchedule::constant(60.0),
            0.0,
            0.0,
            0.0,
            0.0,
        );
        for t in [35.0, 55.0, 90.0] {
            let v = species.growth.volume(t).unwrap();
            let d = (-0.03_f64 * t).exp();
            let textbook = d * 60.0 * v / (1.0 - d);
            let got = p.land_value(t).unwrap();
            assert!(
                ((got - textbook) / textbook).abs() < 1e-10,
                "t={t}: {got} vs {textbook}"
            );
        }
    }

    #[test]
    fn divisor_identity_closed_form() {
        // 1 - \int_0^T lambda e^{-(lambda+r) t} dt - e^{-(lambda+r) T}
        //   = r/(lambda+r) (1 - e^{-(lambda+r) T})
        for (lambda, r, t) in [
            (0.005_f64, 0.03_f64, 40.0_f64),
            (0.02, 0.01, 120.0),
            (0.0009, 0.07, 7.5),
        ] {
            let lhs = 1.0
                - lambda / (lambda + r) * (1.0 - (-(lambda + r) * t).exp())
                - (-(lambda + r) * t).exp();
            let rhs = r / (lambda + r) * (1.0 - (-(lambda + r) * t).exp());
            assert!((lhs - rhs).abs() < 1e-14, "({lambda}, {r}, {t})");
        }
    }

    #[test]
    fn salvage_substitution_matches_composite_gamma() {
        // With a constant price schedule, moving salvage into gamma via
        // gamma + delta P_F / (alpha P_c) leaves D(t) unchanged.
        let species = SpeciesParams::scots_pine();
        let p_const = 45.0;
        let delta = 0.35;
        let explicit = problem(
            &species,
            DamageKind::Fire,
            PriceSchedule::constant(p_const),
            80.0,
            0.004,
            0.0,
            delta,
        );
        let mut folded = explicit.clone();
        folded.econ.salvage_fraction = 0.0;
        folded.carbon.gamma += delta * p_const / (folded.carbon.alpha * 80.0);
        for t in [5.0, 42.0, 110.0] {
            let a = explicit.damage_revenue(t).unwrap();
            let b = folded.damage_revenue(t).unwrap();
            assert!(
                ((a - b) / a.abs().max(1.0)).abs() < 1e-10,
                "t={t}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn foc_residual_changes_sign_around_faustmann_optimum() {
        let species = SpeciesParams::scots_pine();
        let p = problem(
            &species,
            DamageKind::Fire,
            PriceSchedule::constant(60.0),
            0.0,
            0.0,
            0.0,
            0.0,
        );
        // Scan for the land-value maximum on a fine grid.
        let mut best = (0.0, f64::NEG_INFINITY);
        let mut t = 5.0;
        while t <= 200.0 {
            let v = p.land_value(t).unwrap();
            if v > best.1 {
                best = (t, v);
            }
            t += 0.05;
        }
        let t_star = best.0;
        let before = p.foc_residual(t_star - 1.0).unwrap();
        let after = p.foc_residual(t_star + 1.0).unwrap();
        assert!(
            before > 0.0 && after < 0.0,
            "residual does not bracket optimum at {t_star}: {before}, {after}"
        );
        assert!(p.foc_residual(t_star).unwrap().abs() < 1e-3);
    }

    #[test]
    fn land_value_is_lower_with_damage_risk() {
        let p0 = pine_fire(25.0, 0.0);
        let p1 = pine_fire(25.0, 0.005);
        let p2 = pine_fire(25.0, 0.01);
        for t in [40.0, 70.0, 110.0] {
            let v0 = p0.land_value(t).unwrap();
            let v1 = p1.land_value(t).unwrap();
            let v2 = p2.land_value(t).unwrap();
            assert!(v0 > v1 && v1 > v2, "t={t}: {v0}, {v1}, {v2}");
        }
    }

    #[test]
    fn infinite_land_value_without_damage_is_carbon_annuity() {
        let p = pine_fire(100.0, 0.0);
        let w_inf = p.growth.discounted_increment_to_infinity(0.03).unwrap();
        let expected = 1.29 * 100.0 * w_inf;
        assert!((p.land_value_infinite().unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn infinite_land_value_is_limit_of_land_value() {
        let p = pine_fire(100.0, 0.004);
        let limit = p.land_value_infinite().unwrap();
        let at_large_t = p.land_value(4000.0).unwrap();
        assert!(
            ((limit - at_large_t) / limit).abs() < 1e-6,
            "limit {limit} vs V(4000) {at_large_t}"
        );
    }
}
