//! Calibration of the binned test on a null model, and the negative
//! controls that the test must reject.

use serde::{Deserialize, Serialize};
use serde_json::json;
use statrs::distribution::{ContinuousCDF, Normal};

use super::bessel::{honest_data, honest_spec, pitman_data, pitman_spec, HonestParams, PitmanParams};
use super::brownian::{cox_observations, cox_spec, emery_data, emery_spec, jacod_observations, jacod_spec, CoxParams, EmeryParams, JacodParams};
use super::fa1::{bounded_against_divergent, Fa1Params};
use super::{flatten, macro_starts, per_path, uncompensated, Check, CriterionOutcome};
use crate::mctest::{cond_mean_zero, MartingaleTestSpec, Observation, TestReport, Verdict};
use crate::simulate::paths::fill_brownian;
use crate::simulate::rng::path_rng;
use crate::simulate::TimeGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationParams {
    pub n_seeds: usize,
    pub paths_per_seed: usize,
    pub dt: f64,
    pub macro_len: usize,
    pub base_seed: u64,
    pub max_false_positive: f64,
    /// Paths per negative control.
    pub control_paths: usize,
}

impl Default for CalibrationParams {
    fn default() -> Self {
        Self {
            n_seeds: 100,
            paths_per_seed: 2000,
            dt: 1.0 / 512.0,
            macro_len: 8,
            base_seed: 1000,
            max_false_positive: 0.01,
            control_paths: 20_000,
        }
    }
}

/// Brownian increments on `[0, 1]` with feature `W_t` and zero drift.
pub fn null_observations(n_paths: usize, dt: f64, macro_len: usize, seed: u64) -> Vec<Observation> {
    let grid = TimeGrid::uniform(dt, 1.0).expect("valid grid");
    let n = grid.n_steps();
    flatten(per_path(n_paths, |i| {
        let mut w = vec![0.0; grid.len()];
        fill_brownian(&grid, 0.0, &mut path_rng(seed, i), &mut w);
        macro_starts(0, n, macro_len).map(|s| Observation { features: [w[s], 0.0], raw: w[s + macro_len] - w[s], drift: 0.0 }).collect()
    }))
}

/// Observed versus standard normal frequency of `|z|` above thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZRow {
    pub threshold: f64,
    pub observed: f64,
    pub normal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub runs: usize,
    pub false_positives: usize,
    pub rate: f64,
    pub z_table: Vec<ZRow>,
    pub z_mean: f64,
    pub z_variance: f64,
}

pub fn calibrate(p: &CalibrationParams) -> Calibration {
    let spec = MartingaleTestSpec::new(["W_t"]);
    let mut false_positives = 0;
    let mut zs = Vec::new();
    for k in 0..p.n_seeds {
        let obs = null_observations(p.paths_per_seed, p.dt, p.macro_len, p.base_seed + k as u64);
        let r = cond_mean_zero("null", &obs, &spec);
        if r.verdict != Verdict::Pass {
            false_positives += 1;
        }
        zs.extend(r.bins.iter().map(|b| b.z));
    }
    let n = zs.len() as f64;
    let z_mean = zs.iter().sum::<f64>() / n;
    let z_variance = zs.iter().map(|z| (z - z_mean).powi(2)).sum::<f64>() / (n - 1.0);
    let normal = Normal::standard();
    let z_table = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5]
        .into_iter()
        .map(|c| ZRow {
            threshold: c,
            observed: zs.iter().filter(|z| z.abs() > c).count() as f64 / n,
            normal: 2.0 * normal.sf(c),
        })
        .collect();
    Calibration { runs: p.n_seeds, false_positives, rate: false_positives as f64 / p.n_seeds as f64, z_table, z_mean, z_variance }
}

impl Calibration {
    pub fn z_table_csv(&self) -> String {
        let mut s = String::from("threshold,observed,normal\n");
        for r in &self.z_table {
            s.push_str(&format!("{},{},{}\n", r.threshold, r.observed, r.normal));
        }
        s
    }
}

/// A control is rejected when the binned verdict is not a pass.
fn rejected(name: &str, r: &TestReport) -> Check {
    Check::new(
        format!("control rejected: {name}"),
        r.verdict == Verdict::Fail,
        format!("verdict {}, {:.4} of {} bins within band, max |z| {:.2}", r.verdict, r.fraction_within_band, r.occupied_bins, r.max_abs_z),
    )
}

/// Each listed negative control, run on fewer paths than the reference
/// experiments. Every one must fail the test.
pub fn negative_controls(n: usize) -> Vec<Check> {
    let jacod = JacodParams { n_paths: n, ..Default::default() };
    let obs = jacod_observations(&jacod);
    let mut out = vec![rejected("bridge, raw increments", &cond_mean_zero("bridge raw", &uncompensated(&obs), &jacod_spec()))];
    let flipped = jacod_observations(&JacodParams { drift_sign: -1.0, ..jacod });
    out.push(rejected("bridge, sign-flipped drift", &cond_mean_zero("bridge flipped", &flipped, &jacod_spec())));

    let pitman = pitman_data(&PitmanParams { n_paths: n, ..Default::default() });
    out.push(rejected("future infimum, Z alone", &cond_mean_zero("Z alone", &uncompensated(&pitman.obs), &pitman_spec())));

    let honest = honest_data(&HonestParams { n_paths: n, ..Default::default() });
    out.push(rejected("last passage before, raw", &cond_mean_zero("before raw", &uncompensated(&honest.before), &honest_spec())));
    out.push(rejected("last passage after, raw", &cond_mean_zero("after raw", &uncompensated(&honest.after), &honest_spec())));

    let emery = emery_data(&EmeryParams { n_paths: n, ..Default::default() });
    out.push(rejected("Emery post-xi, raw", &cond_mean_zero("post-xi raw", &uncompensated(&emery.post), &emery_spec())));

    let cox = cox_observations(&CoxParams { n_paths: n, ..Default::default() }, true);
    out.push(rejected("Cox time, fake drift", &cond_mean_zero("cox fake", &cox, &cox_spec())));

    let fa1 = Fa1Params { n_paths: n.min(5000), ..Default::default() };
    let (_, gap) = bounded_against_divergent(&fa1);
    out.push(Check::new(
        "control rejected: bounded integrand against the divergent form",
        gap > fa1.rel_tol,
        format!("largest relative gap {gap:.3} (tolerance {})", fa1.rel_tol),
    ));
    out
}

pub fn run_calibration(p: &CalibrationParams) -> CriterionOutcome {
    let cal = calibrate(p);
    let mut checks = vec![Check::new(
        "null false-positive rate",
        cal.rate <= p.max_false_positive,
        format!("{} of {} runs rejected; z mean {:.3}, variance {:.3}", cal.false_positives, cal.runs, cal.z_mean, cal.z_variance),
    )];
    checks.extend(negative_controls(p.control_paths));
    let table = cal.z_table_csv();
    CriterionOutcome::new(9, "harness calibration", checks, json!({ "params": p, "calibration": cal })).with_tables(vec![("z_calibration".into(), table)])
}
