//! Realized quadratic variation against its expected value.

use serde::Serialize;

use super::{mean_se, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QvReport {
    pub name: String,
    pub n_paths: usize,
    pub expected: f64,
    pub mean: f64,
    pub se: f64,
    pub z: f64,
    pub relative_error: f64,
    /// Allowed `|mean - expected|`, relative to `expected` unless that is
    /// zero.
    pub tolerance: f64,
    pub verdict: Verdict,
    pub pass: bool,
}

/// Compare per-path realized variations to `expected`. Passes when the
/// deviation of the mean is within `tol` (relative, or absolute when
/// `expected == 0`).
pub fn qv_test(name: &str, realized: &[f64], expected: f64, tol: f64) -> QvReport {
    let (mean, se, n) = mean_se(realized.iter().copied());
    let dev = (mean - expected).abs();
    let relative_error = if expected != 0.0 { dev / expected.abs() } else { dev };
    let verdict = if n == 0 { Verdict::Degenerate } else { Verdict::from_pass(relative_error <= tol) };
    QvReport {
        name: name.into(),
        n_paths: n,
        expected,
        mean,
        se,
        z: if se > 0.0 { (mean - expected) / se } else { 0.0 },
        relative_error,
        tolerance: tol,
        verdict,
        pass: verdict.is_pass(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::functionals::realized_qv;
    use crate::simulate::gen_brownian;

    #[test]
    fn brownian_and_constant() {
        let pb = gen_brownian(1000, 1.0 / 256.0, 1.0, 1).unwrap();
        let qv: Vec<f64> = pb.paths().map(|p| realized_qv(p, 256)).collect();
        assert!(qv_test("bm", &qv, 1.0, 0.03).pass);
        let flat = vec![0.0; 10];
        let r = qv_test("const", &flat, 0.0, 1e-12);
        assert!(r.pass && r.mean == 0.0);
        assert_eq!(qv_test("none", &[], 1.0, 0.1).verdict, Verdict::Degenerate);
    }
}
