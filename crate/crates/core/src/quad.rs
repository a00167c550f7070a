//! Adaptive Gauss–Kronrod quadrature.
//!
//! Used for the expected-damage integral in the land-value function. The
//! integrands there are smooth products of polynomials and exponentials, so a
//! 7/15-point Gauss–Kronrod pair with recursive bisection converges in a
//! handful of panels. Kept generic so a non-exponential damage density can be
//! dropped in later without touching the economics.

use crate::error::{ModelError, Result};

/// Kronrod abscissae for the 15-point rule (positive half, descending).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// Weights of the embedded 7-point Gauss rule (matching XGK[1], XGK[3], ...).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Weights of the 15-point Kronrod rule.
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const MAX_DEPTH: u32 = 48;

/// One G7/K15 evaluation on `[a, b]`. Returns `(kronrod, |kronrod - gauss|)`.
fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let f_center = f(center);
    let mut result_gauss = WG[3] * f_center;
    let mut result_kronrod = WGK[7] * f_center;

    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        result_kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            result_gauss += WG[j / 2] * sum;
        }
    }

    result_kronrod *= half;
    result_gauss *= half;
    (result_kronrod, (result_kronrod - result_gauss).abs())
}

fn integrate_rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    let (value, err) = kronrod_panel(f, a, b);
    if !value.is_finite() {
        return Err(ModelError::Numerical {
            op: "integrate",
            reason: format!("integrand produced a non-finite value on [{a}, {b}]"),
        });
    }
    if err <= tol || depth >= MAX_DEPTH {
        return Ok(value);
    }
    let mid = 0.5 * (a + b);
    let half_tol = 0.5 * tol;
    Ok(integrate_rec(f, a, mid, half_tol, depth + 1)?
        + integrate_rec(f, mid, b, half_tol, depth + 1)?)
}

/// Integrate `f` over `[a, b]` to the given absolute tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(ModelError::domain("integrate", "bounds must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    let tol = abs_tol.max(f64::MIN_POSITIVE);
    integrate_rec(&f, a, b, tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // K15 is exact for degree <= 22.
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 8.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn damped_exponential() {
        // \int_0^50 t e^{-0.1 t} dt = 100 (1 - 6 e^{-5})
        let exact = 100.0 * (1.0 - 6.0 * (-5.0f64).exp());
        let v = integrate(|t| t * (-0.1 * t).exp(), 0.0, 50.0, 1e-12).unwrap();
        assert!((v - exact).abs() < 1e-10, "got {v}, want {exact}");
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(|x| x.exp(), 3.0, 3.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn oscillatory_integrand_converges() {
        let v = integrate(|x| (10.0 * x).sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        let exact = (1.0 - (10.0 * std::f64::consts::PI).cos()) / 10.0;
        assert!((v - exact).abs() < 1e-10, "got {v}, want {exact}");
    }

    #[test]
    fn rejects_non_finite_bounds() {
        assert!(integrate(|x| x, 0.0, f64::INFINITY, 1e-9).is_err());
    }
}
