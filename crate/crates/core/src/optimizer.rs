//! Optimal rotation solver.
//!
//! A coarse one-year scan of the land value locates the global maximum basin
//! (the land value can be multimodal under age-dependent prices), golden
//! section refines it, and a bracketed root of the first-order condition
//! polishes the result. A maximum that sits on the horizon with a still
//! positive slope is classified as the infinite-rotation regime.

use serde::{Deserialize, Serialize};

use crate::economics::{RotationProblem, MIN_ROTATION_YEARS};
use crate::error::{ModelError, Result};

/// Tuning knobs for the rotation solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Horizon separating finite optima from the infinite-rotation regime.
    /// At the default 3% discount rate, e^{-0.03 * 1000} ~ 1e-13: longer
    /// rotations are economically indistinguishable.
    pub t_max: f64,
    /// Step of the coarse global scan (years).
    pub coarse_step: f64,
    /// Width at which golden-section refinement stops (years).
    pub golden_tol: f64,
    /// Iteration cap for each refinement stage.
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            t_max: 1000.0,
            coarse_step: 1.0,
            golden_tol: 1e-8,
            max_iterations: 200,
        }
    }
}

/// Classification of the optimal policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Regime {
    /// Interior optimum: harvest at `t_star` years.
    Finite { t_star: f64 },
    /// Never harvest: the land value is still rising at the horizon.
    Infinite,
    /// Even the best rotation has negative value; leave the land bare.
    NoPositiveValue,
}

impl Regime {
    pub fn t_star(&self) -> Option<f64> {
        match *self {
            Regime::Finite { t_star } => Some(t_star),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Regime::Finite { .. })
    }
}

/// Solver diagnostics attached to every solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Final bracketing interval around the reported optimum.
    pub bracket: (f64, f64),
    /// Total refinement iterations (golden section + root polish).
    pub iterations: usize,
    /// Human-readable description of the path the solver took.
    pub method: String,
    /// Land value at the horizon; for the infinite regime this is the
    /// finite-horizon lower bound accompanying the analytic limit.
    pub lev_at_t_max: Option<f64>,
}

/// Result of the rotation optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSolution {
    pub regime: Regime,
    /// Land expectation value at the solution (the analytic limit for the
    /// infinite regime).
    pub lev: f64,
    /// Normalized first-order-condition residual at the solution.
    pub foc_residual: f64,
    pub diagnostics: Diagnostics,
}

impl RotationSolution {
    /// Rotation age to simulate: `f64::INFINITY` encodes "never harvest".
    pub fn rotation_age(&self) -> Option<f64> {
        match self.regime {
            Regime::Finite { t_star } => Some(t_star),
            Regime::Infinite => Some(f64::INFINITY),
            Regime::NoPositiveValue => None,
        }
    }
}

/// Solve with default options.
pub fn solve_optimal_rotation(problem: &RotationProblem) -> Result<RotationSolution> {
    solve_with(problem, &SolverOptions::default())
}

/// Solve for the optimal rotation length.
pub fn solve_with(problem: &RotationProblem, opts: &SolverOptions) -> Result<RotationSolution> {
    problem.validate()?;
    if !(opts.t_max.is_finite() && opts.t_max > 1.0) {
        return Err(ModelError::invalid("t_max", "must be finite and > 1"));
    }
    if !(opts.coarse_step.is_finite() && opts.coarse_step > 0.0) {
        return Err(ModelError::invalid("coarse_step", "must be finite and > 0"));
    }

    // Coarse global scan. Ties within 1e-9 keep the smaller rotation.
    let mut best_t = opts.coarse_step.min(opts.t_max);
    let mut best_v = f64::NEG_INFINITY;
    let mut t = best_t;
    let mut last_t = best_t;
    while t <= opts.t_max + 1e-12 {
        let v = problem.land_value(t)?;
        let threshold = if best_v.is_finite() {
            best_v + 1e-9 * best_v.abs().max(1.0)
        } else {
            best_v
        };
        if v > threshold {
            best_v = v;
            best_t = t;
        }
        last_t = t;
        t += opts.coarse_step;
    }

    let at_horizon = (best_t - last_t).abs() < 0.5 * opts.coarse_step;
    let lev_at_t_max = problem.land_value(last_t)?;
    let lev_infinite = problem.land_value_infinite()?;

    // The land value still rises at the horizon when its derivative there is
    // positive. The normalized first-order condition is that derivative up
    // to a strictly positive multiplier and stays O(1) on the late plateau,
    // where a difference quotient of the land value drowns in rounding.
    let foc_at_horizon = problem.foc_residual(last_t)?;
    let rising_at_horizon = foc_at_horizon > 1e-9;

    if at_horizon && rising_at_horizon && lev_infinite > 0.0 {
        return Ok(RotationSolution {
            regime: Regime::Infinite,
            lev: lev_infinite,
            foc_residual: foc_at_horizon,
            diagnostics: Diagnostics {
                bracket: (last_t, f64::INFINITY),
                iterations: 0,
                method: "coarse-scan, land value rising at horizon: infinite regime".to_string(),
                lev_at_t_max: Some(lev_at_t_max),
            },
        });
    }

    // Refine the bracketing cell around the best grid point.
    let lo = (best_t - opts.coarse_step).max(MIN_ROTATION_YEARS * 10.0);
    let hi = (best_t + opts.coarse_step).min(opts.t_max);
    let (mut t_star, golden_iters) = golden_section_max(problem, lo, hi, opts)?;
    let mut method = String::from("coarse-scan + golden-section");
    let mut iterations = golden_iters;

    // Polish with a bracketed root of the first-order condition when the
    // residual changes sign across the cell.
    let f_lo = problem.foc_residual(lo)?;
    let f_hi = problem.foc_residual(hi)?;
    if f_lo.signum() != f_hi.signum() && f_lo.is_finite() && f_hi.is_finite() {
        let (root, root_iters) = brent_root(problem, lo, hi, f_lo, f_hi, opts)?;
        iterations += root_iters;
        // Only accept the polish if it stays in the refined basin.
        if (root - t_star).abs() <= opts.coarse_step {
            t_star = root;
            method.push_str(" + foc-root-polish");
        }
    }

    let lev = problem.land_value(t_star)?;
    let residual = problem.foc_residual(t_star)?;

    // A grid "maximum" on the flat approach to the never-harvest value is
    // rounding noise, not an interior optimum: when the land value is still
    // rising at the horizon, the refined candidate must beat the analytic
    // never-harvest limit by more than noise to count as finite.
    if rising_at_horizon && lev_infinite > 0.0 && lev <= lev_infinite + 1e-9 * lev.abs().max(1.0) {
        return Ok(RotationSolution {
            regime: Regime::Infinite,
            lev: lev_infinite,
            foc_residual: foc_at_horizon,
            diagnostics: Diagnostics {
                bracket: (best_t.min(last_t), f64::INFINITY),
                iterations,
                method: format!("{method}; never-harvest value dominates: infinite regime"),
                lev_at_t_max: Some(lev_at_t_max),
            },
        });
    }

    if lev < 0.0 {
        return Ok(RotationSolution {
            regime: Regime::NoPositiveValue,
            lev,
            foc_residual: residual,
            diagnostics: Diagnostics {
                bracket: (lo, hi),
                iterations,
                method: format!("{method}; best value negative"),
                lev_at_t_max: Some(lev_at_t_max),
            },
        });
    }

    Ok(RotationSolution {
        regime: Regime::Finite { t_star },
        lev,
        foc_residual: residual,
        diagnostics: Diagnostics {
            bracket: (lo, hi),
            iterations,
            method,
            lev_at_t_max: Some(lev_at_t_max),
        },
    })
}

/// Golden-section maximization of the land value on `[lo, hi]`.
fn golden_section_max(
    problem: &RotationProblem,
    mut lo: f64,
    mut hi: f64,
    opts: &SolverOptions,
) -> Result<(f64, usize)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = problem.land_value(x1)?;
    let mut f2 = problem.land_value(x2)?;
    let mut iterations = 0;
    while hi - lo > opts.golden_tol {
        if iterations >= opts.max_iterations {
            return Err(ModelError::NoConvergence {
                iterations,
                bracket_lo: lo,
                bracket_hi: hi,
            });
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = problem.land_value(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = problem.land_value(x1)?;
        }
        iterations += 1;
    }
    Ok((0.5 * (lo + hi), iterations))
}

/// Brent's method for a root of the normalized FOC residual on `[a, b]`.
fn brent_root(
    problem: &RotationProblem,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    opts: &SolverOptions,
) -> Result<(f64, usize)> {
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    let mut iterations = 0;

    loop {
        if iterations >= opts.max_iterations {
            return Err(ModelError::NoConvergence {
                iterations,
                bracket_lo: b.min(c),
                bracket_hi: b.max(c),
            });
        }
        iterations += 1;

        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }

        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5e-10;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol || fb == 0.0 {
            return Ok((b, iterations));
        }

        if e.abs() >= tol && fa.abs() > fb.abs() {
            // Attempt secant / inverse quadratic interpolation.
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q0 * (q0 - r) - (b - a) * (r - 1.0)),
                    (q0 - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }

        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol * xm.signum() };
        fb = problem.foc_residual(b)?;
    }
}

/// Which parameter a sensitivity query perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbParam {
    CarbonPrice,
    DamageRate,
}

/// Signed change of the optimal rotation when `param` moves by `delta`.
///
/// Both the base and the perturbed problem must solve to a finite regime;
/// crossing into the infinite or no-value regime is reported as a
/// regime-change error.
pub fn solution_sensitivity(
    problem: &RotationProblem,
    param: PerturbParam,
    delta: f64,
) -> Result<f64> {
    let mut perturbed = problem.clone();
    match param {
        PerturbParam::CarbonPrice => perturbed.econ.carbon_price += delta,
        PerturbParam::DamageRate => perturbed.damage_rate += delta,
    }
    let base = solve_optimal_rotation(problem)?;
    let moved = solve_optimal_rotation(&perturbed)?;
    match (base.regime.t_star(), moved.regime.t_star()) {
        (Some(t0), Some(t1)) => Ok(t1 - t0),
        _ => Err(ModelError::RegimeChange(format!(
            "base regime {:?}, perturbed regime {:?}",
            base.regime, moved.regime
        ))),
    }
}
