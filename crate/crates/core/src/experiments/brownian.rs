//! Brownian experiments: a Cox time, the bridge enlargement by `W_1` and the
//! last zero of `W_1 - 2 W_t`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    azema_check, by_time, flatten, grid_index, macro_starts, per_path, repelled_integral, riemann, uncompensated, window_end, Check, CriterionOutcome,
    DriftQuadrature, QUADRATURE_CHANNEL,
};
use crate::formulas::honest::cox_azema;
use crate::formulas::{azema_emery, emery_post_drift, jacod_bridge_drift};
use crate::mctest::{azema_consistency, cond_mean_zero, AzemaObservation, MartingaleTestSpec, Observation, TestReport};
use crate::simulate::functionals::{cox_threshold, cox_time_path, emery_xi_bridge, emery_xi_path, BRIDGE_CHANNEL};
use crate::simulate::paths::fill_brownian;
use crate::simulate::rng::{channel_rng, path_rng};
use crate::simulate::{RandomTime, TimeGrid};

pub const DEFAULT_DT: f64 = 1.0 / 512.0;

fn brownian_path(grid: &TimeGrid, seed: u64, path: u64) -> Vec<f64> {
    let mut w = vec![0.0; grid.len()];
    fill_brownian(grid, 0.0, &mut path_rng(seed, path), &mut w);
    w
}

/// Intensity of the Cox experiment.
pub fn cox_intensity(w: f64) -> f64 {
    1.0 + w * w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoxParams {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub macro_len: usize,
    pub finite_models: usize,
    pub azema_times: Vec<f64>,
}

impl Default for CoxParams {
    fn default() -> Self {
        Self { n_paths: 50_000, dt: DEFAULT_DT, seed: 11, macro_len: 8, finite_models: 100, azema_times: vec![0.25, 0.5, 0.75, 1.0] }
    }
}

/// Increments of `W` on `[0, 1]` with features `(W_t, tau ^ t)`. With
/// `fake_drift` the intensity killed at the Cox time is used as a drift,
/// which is wrong since `W` stays a martingale.
pub fn cox_observations(p: &CoxParams, fake_drift: bool) -> Vec<Observation> {
    let grid = TimeGrid::uniform(p.dt, 1.0).expect("valid grid");
    let n = grid.n_steps();
    flatten(per_path(p.n_paths, |i| {
        let w = brownian_path(&grid, p.seed, i);
        let tau = cox_time_path(&w, &grid, cox_intensity, cox_threshold(p.seed, i)).time();
        let t = grid.times();
        macro_starts(0, n, p.macro_len)
            .map(|s| {
                let drift = if fake_drift {
                    riemann(&grid, s, p.macro_len, |j| if t[j] < tau { cox_intensity(w[j]) } else { 0.0 })
                } else {
                    0.0
                };
                Observation { features: [w[s], tau.min(t[s])], raw: w[s + p.macro_len] - w[s], drift }
            })
            .collect()
    }))
}

pub fn cox_spec() -> MartingaleTestSpec {
    MartingaleTestSpec::new(["W_t", "tau ^ t"])
}

/// Base martingales keep their law under an independent coin or a Cox time.
pub fn run_hypothesis_h(p: &CoxParams) -> CriterionOutcome {
    let (finite, finite_details) = super::exact::hypothesis_h_finite(p.finite_models, p.seed);
    let report = cond_mean_zero("cox time, zero drift", &cox_observations(p, false), &cox_spec());
    let checks = vec![finite, Check::from_report(&report)];
    CriterionOutcome::new(2, "hypothesis (H) sanity", checks, json!({ "params": p, "finite": finite_details, "mc": summary(&report) }))
        .with_tables(vec![("cox_bins".into(), report.bins_csv())])
}

/// Survival of the Cox time against `exp(-Lambda_t)`, binned on `Lambda_t`.
/// The time is defined by the same left-point integral, so the identity
/// holds exactly on the grid.
pub fn run_cox_azema(p: &CoxParams) -> CriterionOutcome {
    let grid = TimeGrid::uniform(p.dt, 1.0).expect("valid grid");
    let t = grid.times();
    let at: Vec<usize> = p.azema_times.iter().map(|&s| grid_index(&grid, s)).collect();
    let per = per_path(p.n_paths, |i| {
        let w = brownian_path(&grid, p.seed, i);
        let tau = cox_time_path(&w, &grid, cox_intensity, cox_threshold(p.seed, i));
        let cumulative: Vec<f64> = std::iter::once(0.0)
            .chain(grid.steps().iter().zip(&w).scan(0.0, |acc, (dt, &x)| {
                *acc += cox_intensity(x) * dt;
                Some(*acc)
            }))
            .collect();
        at.iter()
            .map(|&k| AzemaObservation { feature: cumulative[k], survived: tau.after(t[k]), azema: cox_azema(cumulative[k]) })
            .collect()
    });
    let az = azema_consistency("survival of the Cox time", &by_time(&p.azema_times, per), 20, 30, 3.0, 0.95);
    CriterionOutcome::new(2, "Cox time survival", vec![azema_check(&az)], json!({ "params": p, "azema": az }))
        .with_tables(vec![("cox_azema_bins".into(), az.bins_csv())])
}

/// Report without the per-bin rows, for embedding in details.
pub(crate) fn summary(r: &TestReport) -> serde_json::Value {
    let mut v = serde_json::to_value(r).expect("serializable");
    v.as_object_mut().expect("object").remove("bins");
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JacodParams {
    pub n_paths: usize,
    pub dt: f64,
    pub window_end: f64,
    pub seed: u64,
    pub macro_len: usize,
    /// `-1` flips the drift, a deliberately wrong compensator.
    pub drift_sign: f64,
}

impl Default for JacodParams {
    fn default() -> Self {
        Self { n_paths: 50_000, dt: DEFAULT_DT, window_end: 0.9, seed: 12, macro_len: 8, drift_sign: 1.0 }
    }
}

pub fn jacod_observations(p: &JacodParams) -> Vec<Observation> {
    let grid = TimeGrid::uniform(p.dt, 1.0).expect("valid grid");
    let end = window_end(&grid, p.window_end);
    let one = grid.n_steps();
    let t = grid.times();
    flatten(per_path(p.n_paths, |i| {
        let w = brownian_path(&grid, p.seed, i);
        let w1 = w[one];
        macro_starts(0, end, p.macro_len)
            .map(|s| {
                let drift = p.drift_sign
                    * riemann(&grid, s, p.macro_len, |j| jacod_bridge_drift(t[j], w[j], w1).expect("t < 1"));
                Observation { features: [w[s], w1], raw: w[s + p.macro_len] - w[s], drift }
            })
            .collect()
    }))
}

pub fn jacod_spec() -> MartingaleTestSpec {
    MartingaleTestSpec::new(["W_t", "W_1"])
}

/// Raw-test failures among the bins whose `|W_1 - W_t|` is in the top
/// quartile over bins.
pub fn high_gap_raw_failures(r: &TestReport, sigma: f64) -> (usize, usize) {
    let mut gaps: Vec<f64> = r.bins.iter().map(|b| (b.centroid[1] - b.centroid[0]).abs()).collect();
    gaps.sort_by(f64::total_cmp);
    if gaps.is_empty() {
        return (0, 0);
    }
    let cut = gaps[3 * gaps.len() / 4];
    let high: Vec<_> = r.bins.iter().filter(|b| (b.centroid[1] - b.centroid[0]).abs() >= cut).collect();
    (high.iter().filter(|b| b.raw_z.abs() > sigma).count(), high.len())
}

pub fn run_jacod(p: &JacodParams) -> CriterionOutcome {
    let spec = jacod_spec();
    let report = cond_mean_zero("bridge drift, compensated", &jacod_observations(p), &spec);
    let (failed, high) = high_gap_raw_failures(&report, spec.sigma);
    let frac = failed as f64 / high.max(1) as f64;
    let checks = vec![
        Check::from_report(&report),
        Check::new(
            "raw increments fail in high-gap bins",
            high > 0 && frac >= spec.control_fail_fraction,
            format!("{failed} of {high} top-quartile |W_1 - W_t| bins outside the band ({frac:.3})"),
        ),
    ];
    CriterionOutcome::new(3, "Jacod bridge", checks, json!({ "params": p, "mc": summary(&report), "high_gap": { "failed": failed, "bins": high } }))
        .with_tables(vec![("jacod_bins".into(), report.bins_csv())])
}

/// How the last zero is located between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossing {
    /// Sign changes on the grid only.
    Grid,
    /// Also samples crossings of the Brownian bridge inside a step.
    Bridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmeryParams {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub macro_len: usize,
    pub azema_times: Vec<f64>,
    pub post_window_end: f64,
    pub crossing: Crossing,
    pub quadrature: DriftQuadrature,
}

impl Default for EmeryParams {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            dt: DEFAULT_DT,
            seed: 13,
            macro_len: 8,
            azema_times: vec![0.25, 0.5, 0.75],
            post_window_end: 0.95,
            crossing: Crossing::Bridge,
            quadrature: DriftQuadrature::DEFAULT_BISECTION,
        }
    }
}

pub struct EmeryData {
    pub azema: Vec<(f64, Vec<AzemaObservation>)>,
    pub post: Vec<Observation>,
    pub xi_before_grid: usize,
}

pub fn emery_data(p: &EmeryParams) -> EmeryData {
    let grid = TimeGrid::uniform(p.dt, 1.0).expect("valid grid");
    let end = window_end(&grid, p.post_window_end);
    let one = grid.n_steps();
    let t = grid.times();
    let at: Vec<usize> = p.azema_times.iter().map(|&s| grid_index(&grid, s)).collect();
    let per = per_path(p.n_paths, |i| {
        let w = brownian_path(&grid, p.seed, i);
        let xi = match p.crossing {
            Crossing::Grid => emery_xi_path(&w, &grid),
            Crossing::Bridge => emery_xi_bridge(&w, &grid, &mut channel_rng(p.seed, BRIDGE_CHANNEL, i)),
        };
        let start = xi.index().unwrap_or(0);
        let w1 = w[one];
        let azema: Vec<AzemaObservation> = at
            .iter()
            .map(|&k| AzemaObservation {
                feature: w[k],
                survived: xi.after(t[k]),
                azema: azema_emery(t[k], w[k]).expect("t < 1"),
            })
            .collect();
        // after xi the distance to W_1 / 2 keeps the sign it has at t = 1
        let level = 0.5 * w1;
        let side = (w1 - level).signum();
        let rate = |tt: f64, y: f64| emery_post_drift(tt, level + side * y, w1).unwrap_or(f64::NAN);
        let mut rng = channel_rng(p.seed, QUADRATURE_CHANNEL, i);
        let post: Vec<Observation> = macro_starts(start, end, p.macro_len)
            .map(|s| {
                let drift = (s..s + p.macro_len)
                    .map(|j| {
                        let (ya, yb) = (side * (w[j] - level), side * (w[j + 1] - level));
                        repelled_integral(p.quadrature, t[j], grid.steps()[j], ya, yb, &rate, &mut rng)
                    })
                    .sum();
                Observation { features: [w[s], w1], raw: w[s + p.macro_len] - w[s], drift }
            })
            .collect();
        (azema, post, xi == RandomTime::At { index: 0, time: 0.0 })
    });
    let mut az = Vec::with_capacity(p.n_paths);
    let mut post = Vec::new();
    let mut xi_before_grid = 0;
    for (a, o, zero) in per {
        az.push(a);
        post.extend(o);
        xi_before_grid += usize::from(zero);
    }
    let azema = by_time(&p.azema_times, az);
    EmeryData { azema, post, xi_before_grid }
}

pub fn run_emery_azema(p: &EmeryParams) -> CriterionOutcome {
    let data = emery_data(p);
    let az = azema_consistency("survival of xi", &data.azema, 20, 30, 3.0, 0.95);
    CriterionOutcome::new(4, "Emery last zero, survival", vec![azema_check(&az)], json!({ "params": p, "azema": az }))
        .with_tables(vec![("emery_azema_bins".into(), az.bins_csv())])
}

pub fn emery_spec() -> MartingaleTestSpec {
    MartingaleTestSpec::new(["W_t", "W_1"])
}

pub fn run_emery(p: &EmeryParams) -> CriterionOutcome {
    let data = emery_data(p);
    let az = azema_consistency("survival of xi", &data.azema, 20, 30, 3.0, 0.95);
    let nan = data.post.iter().filter(|o| !o.drift.is_finite()).count();
    let post: Vec<Observation> = data.post.into_iter().filter(|o| o.drift.is_finite()).collect();
    let report = cond_mean_zero("post-xi drift, compensated", &post, &emery_spec());
    let checks = vec![
        azema_check(&az),
        Check::from_report(&report),
    ];
    let raw = cond_mean_zero("post-xi raw", &uncompensated(&post), &emery_spec());
    CriterionOutcome::new(
        4,
        "Emery last zero",
        checks,
        json!({
            "params": p,
            "azema": az,
            "post": summary(&report),
            "raw_post_verdict": raw.verdict,
            "xi_zero_paths": data.xi_before_grid,
            "undefined_drift_steps": nan,
        }),
    )
    .with_tables(vec![("emery_post_bins".into(), report.bins_csv()), ("emery_azema_bins".into(), az.bins_csv())])
}
