//! Initial enlargement of Brownian motion by its future record times.
//!
//! At a time `t` off the contact set, the next record time `R_t` is the
//! hitting time of the current maximum. Given `(U_t - X_t, R_t - t)` the
//! path up to `R_t` is a first-passage bridge whose drift is
//! [`sup_initial_drift`](crate::formulas::sup_initial_drift).

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::brownian::{summary, DEFAULT_DT};
use super::{
    flatten, macro_starts, per_path, repelled_integral, window_end, Check, CriterionOutcome, DriftQuadrature, QUADRATURE_CHANNEL,
};
use crate::formulas::sup_initial_drift;
use crate::mctest::{cond_mean_zero, MartingaleTestSpec, Observation, Verdict};
use crate::simulate::functionals::{bridge_minimum, record_indices, BRIDGE_CHANNEL};
use crate::simulate::paths::fill_brownian;
use crate::simulate::rng::{channel_rng, path_rng};
use crate::simulate::TimeGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupParams {
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub window_end: f64,
    pub seed: u64,
    pub macro_len: usize,
    /// Censoring above this fraction makes the check inconclusive.
    pub max_censored: f64,
    pub quadrature: DriftQuadrature,
}

impl Default for SupParams {
    fn default() -> Self {
        Self { n_paths: 50_000, dt: DEFAULT_DT, horizon: 16.0, window_end: 1.0, seed: 18, macro_len: 8, max_censored: 0.2, quadrature: DriftQuadrature::DEFAULT_BISECTION }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SupCounts {
    /// Macro steps in the window.
    pub candidates: usize,
    /// No record before the horizon.
    pub censored: usize,
    /// Record within one macro step.
    pub near_record: usize,
}

pub fn sup_observations(p: &SupParams) -> (Vec<Observation>, SupCounts) {
    let grid = TimeGrid::uniform(p.dt, p.horizon).expect("valid grid");
    let end = window_end(&grid, p.window_end);
    let t = grid.times();
    let span = p.macro_len as f64 * p.dt;
    let per = per_path(p.n_paths, |i| {
        let mut x = vec![0.0; grid.len()];
        fill_brownian(&grid, 0.0, &mut path_rng(p.seed, i), &mut x);
        // running maximum of the continuous path: each step contributes the
        // maximum of its Brownian bridge
        let mut bridge = channel_rng(p.seed, BRIDGE_CHANNEL, i);
        let mut u = Vec::with_capacity(x.len());
        u.push(x[0]);
        for j in 0..x.len() - 1 {
            let top = -bridge_minimum(-x[j], -x[j + 1], grid.steps()[j], bridge.random());
            u.push(u[j].max(top));
        }
        let rec = record_indices(&u);
        let mut c = SupCounts::default();
        let mut rng = channel_rng(p.seed, QUADRATURE_CHANNEL, i);
        let mut obs = Vec::new();
        for s in macro_starts(0, end, p.macro_len) {
            c.candidates += 1;
            let Some(r) = rec[s] else {
                c.censored += 1;
                continue;
            };
            // the record lies inside step r - 1
            let record = 0.5 * (t[r - 1] + t[r]);
            if record - t[s] <= span {
                c.near_record += 1;
                continue;
            }
            // before the record the gap to the maximum is repelled from 0
            let top = u[s];
            let rate = |tt: f64, gap: f64| sup_initial_drift(tt, top - gap, top, record).unwrap_or(f64::NAN);
            let drift: f64 = (s..s + p.macro_len)
                .map(|j| repelled_integral(p.quadrature, t[j], grid.steps()[j], top - x[j], top - x[j + 1], &rate, &mut rng))
                .sum();
            obs.push(Observation { features: [u[s] - x[s], record - t[s]], raw: x[s + p.macro_len] - x[s], drift });
        }
        (obs, c)
    });
    let mut total = SupCounts::default();
    let mut obs = Vec::new();
    for (o, c) in per {
        obs.push(o);
        total.candidates += c.candidates;
        total.censored += c.censored;
        total.near_record += c.near_record;
    }
    (flatten(obs), total)
}

pub fn sup_spec() -> MartingaleTestSpec {
    MartingaleTestSpec::new(["U_t - X_t", "R_t - t"])
}

pub fn run_sup(p: &SupParams) -> CriterionOutcome {
    let (obs, counts) = sup_observations(p);
    let undefined = obs.iter().filter(|o| !o.drift.is_finite()).count();
    let obs: Vec<Observation> = obs.into_iter().filter(|o| o.drift.is_finite()).collect();
    let report = cond_mean_zero("record-time drift, compensated", &obs, &sup_spec());
    let censored = counts.censored as f64 / counts.candidates.max(1) as f64;
    let mut drift_check = Check::from_report(&report);
    if censored > p.max_censored {
        drift_check.verdict = Verdict::Inconclusive;
        drift_check.summary = format!("censoring {censored:.3} above {}; {}", p.max_censored, drift_check.summary);
    }
    let checks = vec![
        drift_check,
        Check::new("censored steps", true, format!("{censored:.4} of {} candidate steps have no record by t = {}", counts.candidates, p.horizon)),
    ];
    CriterionOutcome::new(
        8,
        "record-time enlargement",
        checks,
        json!({ "params": p, "counts": counts, "censored_fraction": censored, "undefined_drift_steps": undefined, "mc": summary(&report) }),
    )
    .with_tables(vec![("sup_bins".into(), report.bins_csv())])
}
