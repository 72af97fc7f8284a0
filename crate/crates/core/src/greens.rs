//! Closed-form quantities of the Green's function of `-Δ + λ` in three
//! dimensions, `G_λ(x) = exp(-√λ |x|) / (4π |x|)`.

use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Decay parameter of a Green's function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenParams {
    lambda: f64,
}

impl GreenParams {
    pub fn new(lambda: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        green_value(self.lambda, r)
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {x}")))
    }
}

/// Unchecked kernel used on hot paths where the arguments are known valid.
#[inline]
pub(crate) fn green_unchecked(lambda: f64, r: f64) -> f64 {
    (-lambda.sqrt() * r).exp() / (4.0 * PI * r)
}

pub fn green_value(lambda: f64, r: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_positive("r", r)?;
    Ok(green_unchecked(lambda, r))
}

/// `‖G_λ‖₂² = 1 / (8π√λ)`.
pub fn green_l2_sq(lambda: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    Ok(1.0 / (8.0 * PI * lambda.sqrt()))
}

/// `‖G_1‖_r^r = (4π)^{1-r} Γ(3-r) r^{r-3}`, from the radial integral
/// `(4π)^{1-r} ∫₀^∞ s^{2-r} e^{-rs} ds`.
fn green_unit_lr_norm_pow(r: f64) -> f64 {
    (4.0 * PI).powf(1.0 - r) * gamma(3.0 - r) * r.powf(r - 3.0)
}

/// `‖G_λ‖_r^r = ‖G_1‖_r^r / λ^{(3-r)/2}` for `1 ≤ r < 3`.
pub fn green_lr_norm_pow(lambda: f64, r: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    if !(r.is_finite() && (1.0..3.0).contains(&r)) {
        return Err(domain(format!(
            "G_lambda lies in L^r only for 1 <= r < 3, got r = {r}"
        )));
    }
    Ok(green_unit_lr_norm_pow(r) / lambda.powf((3.0 - r) / 2.0))
}

/// `‖G_λ - G_ν‖₂² = (1/8π)(1/√λ + 1/√ν - 4/(√λ + √ν))`.
pub fn green_diff_l2_sq(lambda: f64, nu: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_positive("nu", nu)?;
    let (a, b) = (lambda.sqrt(), nu.sqrt());
    // (a - b)² / (ab(a + b)) is the same quantity without cancellation
    Ok((a - b).powi(2) / (a * b * (a + b)) / (8.0 * PI))
}

/// `‖∇(G_λ - G_ν)‖₂²` for distinct parameters.
pub fn green_diff_grad_sq(lambda: f64, nu: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_positive("nu", nu)?;
    if lambda == nu {
        return Err(domain("green_diff_grad_sq requires lambda != nu"));
    }
    let (a, b) = (lambda.sqrt(), nu.sqrt());
    // (3λ√ν - 3ν√λ + ν√ν - λ√λ)/(ν - λ) factors as (b - a)³/(b² - a²) = (b - a)²/(a + b)
    Ok((b - a).powi(2) / (a + b) / (8.0 * PI))
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function by the Lanczos approximation (g = 7, nine terms), with
/// reflection below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + k as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn gamma_known_values() {
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-13);
        assert!(rel(gamma(1.0), 1.0) < 1e-13);
        assert!(rel(gamma(1.5), 0.5 * PI.sqrt()) < 1e-13);
        assert!(rel(gamma(2.0), 1.0) < 1e-13);
        assert!(rel(gamma(0.2), 4.590_843_711_998_803) < 1e-12);
        assert!(rel(gamma(5.0), 24.0) < 1e-13);
    }

    #[test]
    fn green_value_spot_and_limits() {
        let v = green_value(1.0, 1.0).unwrap();
        assert!(rel(v, (-1.0f64).exp() / (4.0 * PI)) < 1e-15);
        assert!((v - 0.029_274_9).abs() < 1e-7);
        for &r in &[1e-3, 0.1, 1.0, 7.0] {
            assert!(green_value(4.0, r).unwrap() < green_value(1.0, r).unwrap());
        }
        let near0 = green_value(1.0, 1e-9).unwrap() * 4.0 * PI * 1e-9;
        assert!((near0 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn domain_errors() {
        assert!(green_value(0.0, 1.0).is_err());
        assert!(green_value(1.0, 0.0).is_err());
        assert!(green_value(-1.0, 1.0).is_err());
        assert!(green_l2_sq(0.0).is_err());
        assert!(green_lr_norm_pow(1.0, 3.0).is_err());
        assert!(green_lr_norm_pow(1.0, 0.5).is_err());
        assert!(green_diff_l2_sq(1.0, -2.0).is_err());
        assert!(green_diff_grad_sq(2.0, 2.0).is_err());
    }

    #[test]
    fn spot_values() {
        assert!(rel(green_l2_sq(1.0).unwrap(), 1.0 / (8.0 * PI)) < 1e-15);
        assert!(rel(green_l2_sq(4.0).unwrap(), 1.0 / (16.0 * PI)) < 1e-15);
        assert!(rel(green_lr_norm_pow(1.0, 2.0).unwrap(), 1.0 / (8.0 * PI)) < 1e-13);
        assert!((green_lr_norm_pow(1.0, 2.5).unwrap() - 0.025_164_6).abs() < 1e-7);
        let ratio = green_lr_norm_pow(16.0, 2.5).unwrap() / green_lr_norm_pow(1.0, 2.5).unwrap();
        assert!(rel(ratio, 0.5) < 1e-14);
        assert_eq!(green_diff_l2_sq(1.0, 1.0).unwrap(), 0.0);
        assert!(rel(green_diff_l2_sq(1.0, 4.0).unwrap(), 1.0 / (48.0 * PI)) < 1e-14);
        assert!(rel(green_diff_grad_sq(1.0, 4.0).unwrap(), 1.0 / (24.0 * PI)) < 1e-14);
        assert!(rel(green_diff_grad_sq(4.0, 1.0).unwrap(), 1.0 / (24.0 * PI)) < 1e-14);
    }

    #[test]
    fn factored_forms_match_printed_formulas() {
        for &(l, n) in &[(0.25, 1.0), (1.0, 4.0), (16.0, 0.25), (3.0, 7.0)] {
            let (a, b): (f64, f64) = (f64::sqrt(l), f64::sqrt(n));
            let printed = (1.0 / a + 1.0 / b - 4.0 / (a + b)) / (8.0 * PI);
            assert!(rel(green_diff_l2_sq(l, n).unwrap(), printed) < 1e-12);
            let printed_grad =
                (3.0 * l * b - 3.0 * n * a + n * b - l * a) / (n - l) / (8.0 * PI);
            assert!(rel(green_diff_grad_sq(l, n).unwrap(), printed_grad) < 1e-12);
        }
    }

    #[test]
    fn l2_is_lr_at_two_on_log_grid() {
        for k in 0..=60 {
            let lambda = 10f64.powf(-2.0 + 6.0 * k as f64 / 60.0);
            let a = green_l2_sq(lambda).unwrap();
            let b = green_lr_norm_pow(lambda, 2.0).unwrap();
            assert!(rel(a, b) < 1e-12, "lambda {lambda}: {a} vs {b}");
        }
    }
}
