//! Initial enlargement of a Brownian motion by its terminal value, and the
//! integrand showing that square integrability is not enough for the
//! enlarged stochastic integral to exist.

use super::{domain, FormulaError};

/// Drift rate `(w_1 - w_t) / (1 - t)` of `W` once `W_1` is known.
pub fn jacod_bridge_drift(t: f64, w_t: f64, w_1: f64) -> Result<f64, FormulaError> {
    if !(t < 1.0) {
        return Err(domain("jacod_bridge_drift", format!("needs t < 1, got {t}")));
    }
    Ok((w_1 - w_t) / (1.0 - t))
}

/// `H_s = (1 - s)^(-1/2) (-ln(1 - s))^(-alpha)` on `(1/2, 1)`, zero elsewhere.
pub fn fa1_integrand(s: f64, alpha: f64) -> f64 {
    if s <= 0.5 || s >= 1.0 {
        return 0.0;
    }
    let r = 1.0 - s;
    r.powf(-0.5) * (-r.ln()).powf(-alpha)
}

/// `|H_s| |w_1 - w_s| / (1 - s)`, whose time integral diverges almost surely.
pub fn fa1_companion(s: f64, w_s: f64, w_1: f64, alpha: f64) -> f64 {
    if s <= 0.5 || s >= 1.0 {
        return 0.0;
    }
    fa1_integrand(s, alpha) * (w_1 - w_s).abs() / (1.0 - s)
}

/// `int_{1/2}^{1 - eps} H_s^2 ds`; `eps = 0` gives the full integral
/// `(ln 2)^(1 - 2 alpha) / (2 alpha - 1)`.
pub fn fa1_h_squared_integral(alpha: f64, eps: f64) -> f64 {
    let p = 1.0 - 2.0 * alpha;
    let upper = if eps > 0.0 { (-eps.ln()).powf(p) } else { 0.0 };
    (std::f64::consts::LN_2.powf(p) - upper) / (2.0 * alpha - 1.0)
}

/// `E int_{1/2}^{1 - eps} companion ds`, using `E|W_1 - W_s| = sqrt(2 (1 - s) / pi)`.
pub fn fa1_companion_mean(alpha: f64, eps: f64) -> f64 {
    let q = 1.0 - alpha;
    (2.0 / std::f64::consts::PI).sqrt() * ((-eps.ln()).powf(q) - std::f64::consts::LN_2.powf(q)) / q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bridge_examples() {
        assert_eq!(jacod_bridge_drift(0.3, 0.7, 0.7).unwrap(), 0.0);
        assert_eq!(jacod_bridge_drift(0.0, 0.0, 1.0).unwrap(), 1.0);
        assert!((jacod_bridge_drift(0.5, 0.3, 0.5).unwrap() - 0.4).abs() < 1e-15);
        assert!(jacod_bridge_drift(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn bridge_scaling_identities() {
        for &(t, wt, w1) in &[(0.1, 0.2, -0.4), (0.6, -1.0, 0.5), (0.95, 0.3, 0.31)] {
            let base = jacod_bridge_drift(t, wt, w1).unwrap();
            let doubled = jacod_bridge_drift(t, wt, wt + 2.0 * (w1 - wt)).unwrap();
            assert!((doubled - 2.0 * base).abs() < 1e-12);
            assert!((base * (1.0 - t) - (w1 - wt)).abs() < 1e-12);
        }
    }

    #[test]
    fn fa1_indicator_and_closed_forms() {
        assert_eq!(fa1_integrand(0.5, 0.75), 0.0);
        assert_eq!(fa1_companion(0.2, 0.0, 1.0, 0.75), 0.0);
        let full = fa1_h_squared_integral(0.75, 0.0);
        assert!((full - std::f64::consts::LN_2.powf(-0.5) / 0.5).abs() < 1e-14);
        assert!(fa1_h_squared_integral(0.75, 1e-4) < full);
        let m = [1e-2, 1e-3, 1e-4].map(|e| fa1_companion_mean(0.75, e));
        assert!(m[0] < m[1] && m[1] < m[2]);
    }
}
