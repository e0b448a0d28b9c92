//! The last zero of `W_1 - 2 W_t` before time 1.

use statrs::function::erf::{erf, erfc};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_PI};

use super::{domain, FormulaError};

/// `h(y) = sqrt(2/pi) int_0^y s^2 exp(-s^2/2) ds`, by parts
/// `2 Phi(y) - 1 - sqrt(2/pi) y exp(-y^2/2)`.
pub fn emery_h(y: f64) -> f64 {
    let y = y.abs();
    erf(y * FRAC_1_SQRT_2) - FRAC_2_PI.sqrt() * y * (-0.5 * y * y).exp()
}

/// `1 - h(y)` without cancellation for large `y`.
fn emery_h_complement(y: f64) -> f64 {
    let y = y.abs();
    erfc(y * FRAC_1_SQRT_2) + FRAC_2_PI.sqrt() * y * (-0.5 * y * y).exp()
}

/// `P[t < xi | F_t] = 1 - h(|w_t| / sqrt(1 - t))`.
pub fn azema_emery(t: f64, w_t: f64) -> Result<f64, FormulaError> {
    if !(t < 1.0) {
        return Err(domain("azema_emery", format!("needs t < 1, got {t}")));
    }
    Ok(emery_h_complement(w_t / (1.0 - t).sqrt()).clamp(0.0, 1.0))
}

/// Drift rate of `W` before `xi` once `xi` is revealed as a stopping time:
/// `d<W, Z>_t / Z_t` with `Z = 1 - h(|W_t| / sqrt(1 - t))`, which is
/// `-h'(y) sign(w_t) / (sqrt(1 - t) (1 - h(y)))`.
pub fn emery_pre_drift(t: f64, w_t: f64) -> Result<f64, FormulaError> {
    if !(t < 1.0) {
        return Err(domain("emery_pre_drift", format!("needs t < 1, got {t}")));
    }
    let r = (1.0 - t).sqrt();
    let y = w_t.abs() / r;
    let dh = FRAC_2_PI.sqrt() * y * y * (-0.5 * y * y).exp();
    let z = emery_h_complement(y);
    if z <= 0.0 {
        return Err(domain("emery_pre_drift", format!("Azéma value underflows at y = {y}")));
    }
    Ok(-dh * w_t.signum() / (r * z))
}

/// Drift rate of `W` after `xi`, in the filtration that also knows `W_1`:
///
/// `w_1 / ((e^x - 1)(1 - t)) - (w_t - w_1) / (1 - t)`,
/// `x = (2 w_t w_1 - w_1^2) / (2 (1 - t))`.
///
/// Only defined once the path is past `xi`, which is exactly `x > 0`.
pub fn emery_post_drift(t: f64, w_t: f64, w_1: f64) -> Result<f64, FormulaError> {
    if !(t < 1.0) {
        return Err(domain("emery_post_drift", format!("needs t < 1, got {t}")));
    }
    let r = 1.0 - t;
    let x = (2.0 * w_t * w_1 - w_1 * w_1) / (2.0 * r);
    if !(x > 0.0) {
        return Err(domain("emery_post_drift", format!("exponent {x} <= 0: the path has not passed xi")));
    }
    Ok(w_1 / (x.exp_m1() * r) - (w_t - w_1) / r)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on the printed integrand.
    fn h_by_quadrature(y: f64) -> f64 {
        let n = 4000;
        let step = y / n as f64;
        let f = |s: f64| s * s * (-0.5 * s * s).exp();
        let mut acc = f(0.0) + f(y);
        for k in 1..n {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * step);
        }
        (2.0 / std::f64::consts::PI).sqrt() * acc * step / 3.0
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for k in 0..=80 {
            let y = k as f64 * 0.1;
            assert!((emery_h(y) - h_by_quadrature(y)).abs() < 1e-10, "y = {y}");
        }
        assert!((emery_h(1.0) - 0.19875).abs() < 1e-5);
    }

    #[test]
    fn azema_limits_and_monotonicity() {
        assert_eq!(azema_emery(0.5, 0.0).unwrap(), 1.0);
        assert!(azema_emery(0.5, 40.0).unwrap() < 1e-300);
        let vals: Vec<f64> = (0..50).map(|k| azema_emery(0.3, k as f64 * 0.1).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(azema_emery(1.0, 0.1).is_err());
    }

    #[test]
    fn pre_drift_is_the_log_derivative_of_the_azema_value() {
        let (t, w) = (0.4, 0.7);
        let step = 1e-6;
        let ln = |x: f64| azema_emery(t, x).unwrap().ln();
        let fd = (ln(w + step) - ln(w - step)) / (2.0 * step);
        assert!((emery_pre_drift(t, w).unwrap() - fd).abs() < 1e-7);
        assert_eq!(emery_pre_drift(t, 0.0).unwrap(), 0.0);
        assert_eq!(emery_pre_drift(t, -w).unwrap(), -emery_pre_drift(t, w).unwrap());
    }

    #[test]
    fn post_drift_examples() {
        let rate = emery_post_drift(0.75, 0.8, 1.0).unwrap();
        let independent = 4.0 / (1.2f64.exp() - 1.0) + 0.8f64;
        assert!((rate - independent).abs() < 1e-12);
        assert!((rate - 2.524051).abs() < 1e-6);
        let flipped = emery_post_drift(0.75, -0.8, -1.0).unwrap();
        assert_eq!(flipped, -rate);
        assert!(emery_post_drift(0.5, 0.2, 1.0).is_err());
    }

    #[test]
    fn post_drift_bridge_term_vanishes_at_terminal_value() {
        let (t, w) = (0.6f64, 1.3f64);
        let x = w * w / (2.0 * (1.0 - t));
        let expected = w / ((x.exp() - 1.0) * (1.0 - t));
        assert!((emery_post_drift(t, w, w).unwrap() - expected).abs() < 1e-12);
    }
}
