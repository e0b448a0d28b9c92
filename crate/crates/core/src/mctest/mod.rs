//! Statistical checks that a compensated process is a martingale in an
//! enlarged filtration.
//!
//! Increments are grouped by quantile bins of features known at the start
//! of the increment; within each bin the mean compensated increment should
//! be zero. The same bins applied to the raw increments form the negative
//! control, which must detect the drift.

pub mod azema;
pub mod binning;
pub mod divergence;
pub mod martingale;
pub mod quadrature;
pub mod qv;

pub use azema::{azema_consistency, AzemaObservation, AzemaReport};
pub use divergence::{divergence_profile, DivergenceProfile, DivergenceSpec, Integrand};
pub use martingale::{cond_mean_zero, BinRow, ControlSummary, MartingaleTestSpec, Observation, TestReport};
pub use qv::{qv_test, QvReport};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    /// Too much data had to be excluded to decide.
    Inconclusive,
    /// No usable bins.
    Degenerate,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Self::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Inconclusive => "INCONCLUSIVE",
            Self::Degenerate => "DEGENERATE",
        })
    }
}

/// Mean and standard error of the mean, summed in input order.
pub(crate) fn mean_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let (n, sum) = xs.clone().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = sum / n as f64;
    if n == 1 {
        return (mean, f64::NAN, 1);
    }
    let ss: f64 = xs.map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / ((n - 1) as f64 * n as f64)).sqrt(), n)
}
