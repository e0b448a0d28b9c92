//! Divergence of the companion integral near `t = 1`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Check, CriterionOutcome};
use crate::formulas::fa1_companion_mean;
use crate::mctest::{divergence_profile, DivergenceProfile, DivergenceSpec, Integrand};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fa1Params {
    pub alpha: f64,
    pub eps: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub du: f64,
    pub rel_tol: f64,
}

impl Default for Fa1Params {
    fn default() -> Self {
        Self { alpha: 0.75, eps: vec![1e-2, 1e-3, 1e-4], n_paths: 20_000, seed: 17, du: 0.01, rel_tol: 0.05 }
    }
}

impl Fa1Params {
    pub fn spec(&self, integrand: Integrand) -> DivergenceSpec {
        DivergenceSpec { du: self.du, integrand, rel_tol: self.rel_tol, ..DivergenceSpec::new(self.alpha, self.eps.clone(), self.n_paths, self.seed) }
    }
}

/// The bounded profile set against the divergent closed form. Returns the
/// largest relative gap; the control detects the difference when it
/// exceeds the tolerance.
pub fn bounded_against_divergent(p: &Fa1Params) -> (DivergenceProfile, f64) {
    let bounded = divergence_profile(&p.spec(Integrand::Bounded));
    let gap = bounded
        .rows
        .iter()
        .map(|r| {
            let target = fa1_companion_mean(p.alpha, r.eps);
            (r.mean - target).abs() / target
        })
        .fold(0.0, f64::max);
    (bounded, gap)
}

pub fn run_fa1(p: &Fa1Params) -> CriterionOutcome {
    let prof = divergence_profile(&p.spec(Integrand::Fa1Companion));
    let mut checks: Vec<Check> = prof
        .rows
        .iter()
        .map(|r| {
            Check::new(
                format!("companion mean to 1 - {:e}", r.eps),
                r.within_tolerance,
                format!("{:.4} +- {:.4} vs {:.4}, relative error {:.4}", r.mean, r.se, r.closed_form, r.relative_error),
            )
        })
        .collect();
    let means: Vec<String> = prof.rows.iter().map(|r| format!("{:.4}", r.mean)).collect();
    let limit = prof.limit.map_or("unbounded expected profile".to_string(), |l| format!("expected limit {l:.4}"));
    checks.push(Check::new("profile grows", prof.monotone, format!("means {}; {limit}", means.join(" < "))));
    checks.push(Check::new(
        "square integral converges",
        prof.h_squared_relative_error <= 0.01,
        format!("{:.6} vs {:.6}, relative error {:.2e}", prof.h_squared_total, prof.h_squared_total_closed, prof.h_squared_relative_error),
    ));
    let (bounded, gap) = bounded_against_divergent(p);
    checks.push(Check::new(
        "bounded integrand converges",
        bounded.pass,
        format!(
            "means {}, largest gap to the divergent form {gap:.3}",
            bounded.rows.iter().map(|r| format!("{:.4}", r.mean)).collect::<Vec<_>>().join(", ")
        ),
    ));
    CriterionOutcome::new(7, "companion integral diverges", checks, json!({ "params": p, "profile": prof, "bounded": bounded }))
}
