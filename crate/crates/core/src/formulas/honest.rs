//! Progressive enlargement by a random time: the general drift before the
//! time, and the two-sided formula for the last passage of a transient
//! Bessel(3) process at a level.

use serde::{Deserialize, Serialize};

use super::{domain, FormulaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Before,
    After,
}

/// `P[last passage at a is after t | F_t] = min(1, a / z)`, the probability
/// that Bessel(3) from `z` ever returns to `a`.
pub fn honest_lp_azema(z_t: f64, a: f64) -> Result<f64, FormulaError> {
    check_positive(z_t, a)?;
    Ok((a / z_t).min(1.0))
}

/// Drift rate per unit time of `M = -1/Z` on one side of the last passage at
/// `a`. With `d<M> = z^-4 dt` and martingale part of the Azéma
/// supermartingale `-a dM` above `a`:
///
/// * before, `z > a`: `-z^-3`
/// * before, `z <= a`: `0`
/// * after: `a z^-4 / (1 - a/z)`
///
/// The dual-projection terms of the general formula vanish for a continuous
/// diffusion and are not represented.
pub fn honest_lp_drift(side: Side, z_t: f64, a: f64) -> Result<f64, FormulaError> {
    check_positive(z_t, a)?;
    match side {
        Side::Before if z_t <= a => Ok(0.0),
        Side::Before => Ok(-z_t.powi(-3)),
        Side::After if z_t <= a => Err(domain("honest_lp_drift", format!("after the last passage z = {z_t} must exceed a = {a}"))),
        Side::After => Ok(a * z_t.powi(-4) / (1.0 - a / z_t)),
    }
}

fn check_positive(z_t: f64, a: f64) -> Result<(), FormulaError> {
    if !(z_t > 0.0 && a > 0.0) {
        return Err(domain("honest_lp", format!("needs z > 0 and a > 0, got z = {z_t}, a = {a}")));
    }
    Ok(())
}

/// Drift increments of `M` stopped at the random time, step by step:
/// `(d<N, M> + dB) / Z_-` on steps inside `(0, tau]`, zero after.
///
/// `tau_step` is the number of steps inside `(0, tau]`. Inputs are per-step
/// increments of the covariation with the Azéma martingale part `N` and of
/// the jump compensator part `B`, and the left values of the Azéma
/// supermartingale.
pub fn progressive_jy_drift(tau_step: usize, azema_left: &[f64], d_bracket: &[f64], d_jump: &[f64]) -> Result<Vec<f64>, FormulaError> {
    let n = azema_left.len();
    if d_bracket.len() != n || d_jump.len() != n {
        return Err(domain("progressive_jy_drift", "input lengths differ"));
    }
    (0..n)
        .map(|k| {
            if k >= tau_step {
                return Ok(0.0);
            }
            let z = azema_left[k];
            if !(z > 0.0) {
                return Err(domain("progressive_jy_drift", format!("Azéma value {z} <= 0 at step {k} before the random time")));
            }
            Ok((d_bracket[k] + d_jump[k]) / z)
        })
        .collect()
}

/// Azéma supermartingale of a Cox time, `exp(-Lambda_t)`. It has no
/// martingale part, so every continuous martingale keeps zero drift.
pub fn cox_azema(cumulative_intensity: f64) -> f64 {
    (-cumulative_intensity).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn azema_examples() {
        assert_eq!(honest_lp_azema(0.3, 0.5).unwrap(), 1.0);
        assert_eq!(honest_lp_azema(1.0, 0.5).unwrap(), 0.5);
        assert!(honest_lp_azema(0.0, 0.5).is_err());
    }

    #[test]
    fn branch_rates() {
        assert_eq!(honest_lp_drift(Side::Before, 0.4, 0.5).unwrap(), 0.0);
        assert_eq!(honest_lp_drift(Side::Before, 2.0, 1.0).unwrap(), -0.125);
        assert_eq!(honest_lp_drift(Side::After, 2.0, 1.0).unwrap(), 0.125);
        assert!(honest_lp_drift(Side::After, 1.0, 1.0).is_err());
    }

    #[test]
    fn branches_average_to_zero_under_the_azema_weights() {
        // The base drift of M is zero, so Z * before + (1 - Z) * after = 0.
        for &(z, a) in &[(0.7, 0.5), (3.0, 0.5), (1.5, 1.0)] {
            let p = honest_lp_azema(z, a).unwrap();
            let mix = p * honest_lp_drift(Side::Before, z, a).unwrap() + (1.0 - p) * honest_lp_drift(Side::After, z, a).unwrap();
            assert!(mix.abs() < 1e-14);
        }
    }

    #[test]
    fn progressive_drift_by_hand() {
        let d = progressive_jy_drift(2, &[0.5, 0.25, 0.1], &[0.1, -0.2, 9.0], &[0.0, 0.05, 1.0]).unwrap();
        assert!(d.iter().zip([0.2, -0.6, 0.0]).all(|(x, y)| (x - y).abs() < 1e-15));
        assert_eq!(progressive_jy_drift(3, &[1.0; 3], &[0.0; 3], &[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert!(progressive_jy_drift(1, &[0.0], &[1.0], &[0.0]).is_err());
        assert_eq!(cox_azema(0.0), 1.0);
    }
}
