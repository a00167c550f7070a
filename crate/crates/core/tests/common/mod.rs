//! Shared test oracles, independent of the library's numerical paths.
//!
//! The library integrates with Gauss-Kronrod panels and closed-form
//! antiderivatives; the oracles here use adaptive Simpson quadrature and
//! exact polynomial-times-exponential moments so each check compares two
//! genuinely different routes.

#![allow(dead_code)]

use rotation_core::{GrowthCurve, PriceSchedule, RotationProblem};

/// Adaptive Simpson quadrature with Richardson acceptance.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson_panel<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
    ) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson_panel(f, a, fa, m, fm);
        let (right, rm, frm) = simpson_panel(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth > 60 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth + 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth + 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson_panel(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 0)
}

/// Exact `\int_0^t s^k e^{a s} ds` by the standard recursion.
pub fn poly_exp_moment(k: u32, a: f64, t: f64) -> f64 {
    if a == 0.0 {
        return t.powi(k as i32 + 1) / (k as f64 + 1.0);
    }
    let mut value = ((a * t).exp() - 1.0) / a;
    for j in 1..=k {
        value = (t.powi(j as i32) * (a * t).exp() - j as f64 * value) / a;
    }
    value
}

/// A sum of `c * t^k * e^{rate t}` terms plus a constant.
#[derive(Debug, Clone)]
pub struct PolyExp {
    pub terms: Vec<(f64, u32, f64)>,
    pub constant: f64,
}

impl PolyExp {
    /// The stem volume `v(t)` as an explicit polynomial-exponential sum.
    pub fn volume(curve: &GrowthCurve) -> Self {
        Self::antiderivative(curve.v1(), curve.v2(), curve.v3(), curve.v4())
    }

    /// The discounted increment integral `W(t)` at rate `r`.
    pub fn discounted_increment(curve: &GrowthCurve, r: f64) -> Self {
        Self::antiderivative(curve.v1(), curve.v2() - r, curve.v3(), curve.v4() - r)
    }

    fn antiderivative(c1: f64, b2: f64, c3: f64, b4: f64) -> Self {
        let k2 = c1 / (b2 * b2);
        let k4 = 6.0 * c3 / (b4 * b4 * b4 * b4);
        PolyExp {
            terms: vec![
                (k2 * b2, 1, b2),
                (-k2, 0, b2),
                (c3 / b4, 3, b4),
                (-3.0 * c3 / (b4 * b4), 2, b4),
                (6.0 * c3 / (b4 * b4 * b4), 1, b4),
                (-k4, 0, b4),
            ],
            constant: k2 + k4,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, k, a)| c * t.powi(k as i32) * (a * t).exp())
            .sum::<f64>()
            + self.constant
    }

    /// Exact `\int_0^t self(s) e^{extra s} ds`.
    pub fn integral_with_exp(&self, extra: f64, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, k, a)| c * poly_exp_moment(k, a + extra, t))
            .sum::<f64>()
            + self.constant * poly_exp_moment(0, extra, t)
    }
}

/// Fully closed-form land value, valid when the damage revenue integrand is
/// polynomial-times-exponential: either no salvage or a constant price.
pub fn land_value_closed_form(problem: &RotationProblem, t_end: f64) -> f64 {
    let r = problem.econ.discount_rate;
    let lambda = problem.damage_rate;
    let alpha_pc = problem.carbon.alpha * problem.econ.carbon_price;
    let gamma = problem.carbon.gamma;
    let beta = problem.carbon.beta;
    let delta = problem.econ.salvage_fraction;
    let regen = problem.econ.regeneration_cost;

    let salvage_price = match problem.price {
        PriceSchedule::Constant { price } => price,
        _ => {
            assert_eq!(
                delta, 0.0,
                "closed form needs delta = 0 under age-dependent prices"
            );
            0.0
        }
    };

    let v = PolyExp::volume(&problem.growth);
    let w = PolyExp::discounted_increment(&problem.growth, r);

    // \int_0^T lambda e^{-lambda t} D(t) dt, term by term.
    let expected_damage = if lambda > 0.0 {
        lambda
            * (alpha_pc * w.integral_with_exp(-lambda, t_end)
                + (delta * salvage_price - (1.0 - gamma) * alpha_pc)
                    * v.integral_with_exp(-(r + lambda), t_end)
                - regen * poly_exp_moment(0, -(r + lambda), t_end))
    } else {
        0.0
    };

    let price_at_end = match problem.price {
        PriceSchedule::Constant { price } => price,
        PriceSchedule::AgeDependent { mu, p_f_max } => {
            let x = (mu * t_end) * (mu * t_end) * (mu * t_end).exp();
            x / (1.0 + x) * p_f_max
        }
    };
    let harvest = alpha_pc * w.eval(t_end)
        + (-r * t_end).exp() * ((price_at_end - (1.0 - beta) * alpha_pc) * v.eval(t_end) - regen);

    let numerator = expected_damage + harvest * (-lambda * t_end).exp();
    let divisor = r / (lambda + r) * (1.0 - (-(lambda + r) * t_end).exp());
    numerator / divisor
}

/// Brute-force argmax of the land value on a uniform grid over `(0, t_max]`.
/// Returns `(t_at_max, value_at_max)`.
pub fn brute_force_argmax(problem: &RotationProblem, step: f64, t_max: f64) -> (f64, f64) {
    use rayon::prelude::*;
    let n = (t_max / step).round() as usize;
    let chunk = 4096;
    (0..n)
        .into_par_iter()
        .chunks(chunk)
        .map(|indices| {
            let mut local = (f64::NAN, f64::NEG_INFINITY);
            for i in indices {
                let t = (i as f64 + 1.0) * step;
                let v = problem.land_value(t).expect("land value on grid");
                if v > local.1 {
                    local = (t, v);
                }
            }
            local
        })
        .reduce(
            || (f64::NAN, f64::NEG_INFINITY),
            |a, b| {
                // Deterministic tie-break toward the smaller rotation.
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        )
}
