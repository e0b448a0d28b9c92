//! Initial enlargement by the whole running supremum process.

use super::{domain, FormulaError};

/// Drift rate of `X` given the future record times:
/// `-(1 / (u - x)) (1 - (u - x)^2 / (record - t))`.
///
/// Singular on the contact set `u = x`, which the bracket of `X` does not
/// charge; callers must exclude it.
pub fn sup_initial_drift(t: f64, x_t: f64, u_t: f64, record_t: f64) -> Result<f64, FormulaError> {
    let gap = u_t - x_t;
    if !(gap > 0.0) {
        return Err(domain("sup_initial_drift", format!("needs u > x, got gap {gap}")));
    }
    let wait = record_t - t;
    if !(wait > 0.0) {
        return Err(domain("sup_initial_drift", format!("record time {record_t} is not after t = {t}")));
    }
    Ok(-(1.0 - gap * gap / wait) / gap)
}
