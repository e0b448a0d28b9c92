//! Enlargement by the future infimum of a transient diffusion.

use serde::Serialize;

use super::{domain, FormulaError};
use crate::simulate::ScaleModel;

/// Drift of `e(Z)` in the enlarged filtration over one step: the
/// finite-variation push `2 (e(I') - e(I))` plus the rate
/// `<e(Z)>' / e(Z)` times `dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PitmanDrift {
    pub infimum_push: f64,
    pub bracket_rate: f64,
}

impl PitmanDrift {
    pub fn increment(&self, dt: f64) -> f64 {
        self.infimum_push + self.bracket_rate * dt
    }
}

fn check_class(model: &ScaleModel) -> Result<(), FormulaError> {
    if model.vanishing_at_infinity() {
        Ok(())
    } else {
        Err(domain("pitman", format!("model {} needs a scale with e < 0 and e(inf) = 0", model.name())))
    }
}

fn scale_nonzero(model: &ScaleModel, x: f64) -> Result<f64, FormulaError> {
    let e = model.scale(x);
    if e == 0.0 || !e.is_finite() {
        return Err(domain("pitman", format!("e({x}) = {e}")));
    }
    Ok(e)
}

/// Drift terms for a step from `(z, i)` with the future infimum moving to
/// `i_next`.
pub fn pitman_drift(model: &ScaleModel, z_t: f64, i_t: f64, i_next: f64) -> Result<PitmanDrift, FormulaError> {
    check_class(model)?;
    let e = scale_nonzero(model, z_t)?;
    Ok(PitmanDrift {
        infimum_push: 2.0 * (model.scale(i_next) - model.scale(i_t)),
        bracket_rate: model.scale_bracket_rate(z_t) / e,
    })
}

/// `1/e(Z) - 2/e(I)`, a local martingale in the enlarged filtration; equal
/// to `2I - Z` for Bessel(3).
pub fn pitman_invariant(model: &ScaleModel, z_t: f64, i_t: f64) -> Result<f64, FormulaError> {
    check_class(model)?;
    Ok(1.0 / scale_nonzero(model, z_t)? - 2.0 / scale_nonzero(model, i_t)?)
}

/// Both sides of the local-time identity for `X = e(Z) - e(I)` at level 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalTimeEstimate {
    /// `(1/eps) sum 1{0 < X <= eps} d<e(Z)>`.
    pub occupation_open: f64,
    /// Same with `0 <= X <= eps`, counting grid points of contact.
    pub occupation_closed: f64,
    /// `2 (e(I_end) - e(I_0))`.
    pub rhs: f64,
}

/// Evaluate the identity on one path over steps `0..steps`, with left-point
/// brackets `d<e(Z)>_k = e'(z_k)^2 s(z_k)^2 dt_k`.
pub fn local_time_identity(model: &ScaleModel, z: &[f64], i: &[f64], step_sizes: &[f64], eps: f64) -> Result<LocalTimeEstimate, FormulaError> {
    check_class(model)?;
    if !(eps > 0.0) {
        return Err(domain("local_time_identity", format!("eps must be positive, got {eps}")));
    }
    let steps = step_sizes.len();
    if z.len() <= steps || i.len() <= steps {
        return Err(domain("local_time_identity", "paths shorter than the step list"));
    }
    let mut open = 0.0;
    let mut closed = 0.0;
    for (k, &dt) in step_sizes.iter().enumerate() {
        let x = model.scale(z[k]) - model.scale(i[k]);
        if x <= eps {
            let d = model.scale_bracket_rate(z[k]) * dt;
            closed += d;
            if x > 0.0 {
                open += d;
            }
        }
    }
    Ok(LocalTimeEstimate {
        occupation_open: open / eps,
        occupation_closed: closed / eps,
        rhs: 2.0 * (model.scale(i[steps]) - model.scale(i[0])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariant_is_pitman_process_for_bes3() {
        let m = ScaleModel::bes3();
        assert_eq!(pitman_invariant(&m, 0.8, 0.8).unwrap(), 0.8);
        for &(z, i) in &[(1.0, 0.5), (3.0, 2.5), (0.2, 0.01)] {
            assert!((pitman_invariant(&m, z, i).unwrap() - (2.0 * i - z)).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_terms_for_bes3() {
        let m = ScaleModel::bes3();
        let d = pitman_drift(&m, 2.0, 1.0, 1.25).unwrap();
        assert!((d.bracket_rate + 0.125).abs() < 1e-15);
        assert!((d.infimum_push - 2.0 * (1.0 - 0.8)).abs() < 1e-15);
        let bm = ScaleModel::custom("bm", |_| 0.0, |_| 1.0, |x| x, |_| 1.0, false);
        assert!(pitman_drift(&bm, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn local_time_on_a_hand_path() {
        // e(x) = -1/x: X = 1/I - 1/Z.
        let m = ScaleModel::bes3();
        let z = [1.0, 1.0, 1.01, 2.0, 1.25, 1.5];
        let i = [1.0, 1.0, 1.01, 1.25, 1.25, 1.5];
        let dt = [0.1; 5];
        let est = local_time_identity(&m, &z, &i, &dt, 0.05).unwrap();
        // X = (0, 0, 0, 0.3, 0, 0): no point in (0, eps], four contacts.
        assert_eq!(est.occupation_open, 0.0);
        let closed = (1.0 + 1.0 + 1.01f64.powi(-4) + 1.25f64.powi(-4)) * 0.1 / 0.05;
        assert!((est.occupation_closed - closed).abs() < 1e-12);
        assert!((est.rhs - 2.0 * (1.0 - 1.0 / 1.5)).abs() < 1e-12);
    }
}
