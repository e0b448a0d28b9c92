//! Bessel(3) experiments: the enlargement by the future infimum and the last
//! passage at a level.
//!
//! Paths run on a grid that is uniform on `[0, 1]` and coarsens
//! geometrically up to a long tail horizon. Whatever happens after the tail
//! horizon is closed exactly: from `z`, Bessel(3) has future infimum `z U`
//! with `U` uniform, and returns to `a < z` with probability `a / z`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::brownian::{summary, Crossing, DEFAULT_DT};
use super::{
    azema_check, by_time,    grid_index, macro_starts, per_path, repelled_integral, window_end, Check, CriterionOutcome, DriftQuadrature, QUADRATURE_CHANNEL,
};
use crate::formulas::{honest_lp_azema, honest_lp_drift, local_time_identity, pitman_invariant, Side};
use crate::mctest::{azema_consistency, cond_mean_zero, qv_test, AzemaObservation, MartingaleTestSpec, Observation};
use crate::simulate::functionals::{bessel3_midpoint, future_inf_bridge, BridgeLaw, last_passage_bridge, last_passage_path, suffix_min_path, BRIDGE_CHANNEL, TAIL_CHANNEL};
use crate::simulate::rng::{channel_rng, path_rng};
use crate::simulate::{RandomTime, ScaleModel, TimeGrid};

/// Channel id for the bisection draws of the local-time sub-run.
const REFINE_CHANNEL: u64 = 4;

fn tail_grid(dt: f64, tail_horizon: f64, max_dt: f64) -> TimeGrid {
    TimeGrid::refined_tail(dt, 1.0, tail_horizon, max_dt).expect("valid grid")
}

fn bes3_path(model: &ScaleModel, grid: &TimeGrid, z0: f64, seed: u64, path: u64) -> Vec<f64> {
    let mut z = vec![0.0; grid.len()];
    model.fill(grid, z0, &mut path_rng(seed, path), &mut z);
    z
}

/// Future infimum on the whole grid plus the truncation weight
/// `min(1, m / Z_H)`: the probability that the infimum is attained after
/// the horizon, where `m` is the minimum before it.
fn future_infimum(z: &[f64], grid: &TimeGrid, crossing: Crossing, seed: u64, path: u64) -> (Vec<f64>, f64) {
    let z_h = *z.last().expect("nonempty");
    let beyond = z_h * channel_rng(seed, TAIL_CHANNEL, path).random::<f64>();
    let i = match crossing {
        Crossing::Grid => {
            let mut i = suffix_min_path(z);
            for v in &mut i {
                *v = v.min(beyond);
            }
            i
        }
        Crossing::Bridge => future_inf_bridge(z, grid, BridgeLaw::Bessel3, |_| 1.0, Some(beyond), &mut channel_rng(seed, BRIDGE_CHANNEL, path)),
    };
    let before = z.iter().copied().fold(f64::INFINITY, f64::min);
    (i, (before / z_h).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitmanParams {
    pub n_paths: usize,
    pub dt: f64,
    pub z0: f64,
    pub tail_horizon: f64,
    pub max_tail_dt: f64,
    pub seed: u64,
    pub macro_len: usize,
    pub qv_tolerance: f64,
    pub crossing: Crossing,
    pub localtime_paths: usize,
    pub localtime_dt: f64,
    pub eps: f64,
    pub localtime_tolerance: f64,
    /// Steps are bisected until the spread of `e(Z)` over a step is below
    /// `eps / localtime_resolution`, wherever the band can be reached.
    pub localtime_resolution: f64,
}

impl Default for PitmanParams {
    fn default() -> Self {
        Self {
            n_paths: 50_000,
            dt: DEFAULT_DT,
            z0: 1.0,
            tail_horizon: 200.0,
            max_tail_dt: 0.25,
            seed: 15,
            macro_len: 8,
            qv_tolerance: 0.03,
            crossing: Crossing::Bridge,
            localtime_paths: 10_000,
            localtime_dt: 1.0 / 4096.0,
            eps: 0.01,
            localtime_tolerance: 0.10,
            localtime_resolution: 2.0,
        }
    }
}

pub struct PitmanData {
    /// `raw = -dZ`, compensated increment `d(2I - Z)`.
    pub obs: Vec<Observation>,
    pub qv: Vec<f64>,
    /// Contribution of `(2 dI)^2` to the realized bracket.
    pub qv_infimum_part: Vec<f64>,
    pub truncation: Vec<f64>,
}

pub fn pitman_data(p: &PitmanParams) -> PitmanData {
    let model = ScaleModel::bes3();
    let grid = tail_grid(p.dt, p.tail_horizon, p.max_tail_dt);
    let one = grid_index(&grid, 1.0);
    let per = per_path(p.n_paths, |path| {
        let z = bes3_path(&model, &grid, p.z0, p.seed, path);
        let (i, trunc) = future_infimum(&z, &grid, p.crossing, p.seed, path);
        let inv = |k: usize| pitman_invariant(&model, z[k], i[k]).expect("positive values");
        let obs: Vec<Observation> = macro_starts(0, one, p.macro_len)
            .map(|s| {
                let e = s + p.macro_len;
                let raw = z[s] - z[e];
                Observation { features: [z[s], i[s]], raw, drift: raw - (inv(e) - inv(s)) }
            })
            .collect();
        let qv: f64 = (0..one).map(|k| (inv(k + 1) - inv(k)).powi(2)).sum();
        let qi: f64 = (0..one).map(|k| (2.0 * (i[k + 1] - i[k])).powi(2)).sum();
        (obs, qv, qi, trunc)
    });
    let mut d = PitmanData { obs: Vec::new(), qv: Vec::new(), qv_infimum_part: Vec::new(), truncation: Vec::new() };
    for (o, q, qi, t) in per {
        d.obs.extend(o);
        d.qv.push(q);
        d.qv_infimum_part.push(qi);
        d.truncation.push(t);
    }
    d
}

/// Path values on `[0, 1]` after bisecting the steps where `e(Z) - e(I)`
/// may enter `[0, band]` but is not resolved by the step, listed in time
/// order with the future infimum at each point.
pub struct RefinedPath {
    pub z: Vec<f64>,
    pub inf: Vec<f64>,
    pub steps: Vec<f64>,
    pub points_added: usize,
}

/// Highest level of `Z` at which `1/I - 1/Z <= band` is possible given `I <= m`.
fn band_top(m: f64, band: f64) -> f64 {
    if band * m >= 1.0 {
        f64::INFINITY
    } else {
        m / (1.0 - band * m)
    }
}

struct Refiner<'a, R> {
    band: f64,
    /// A step is resolved once the standard deviation of `e(Z)` over it is
    /// below `band / resolution`.
    resolution: f64,
    max_depth: usize,
    rng: &'a mut R,
    /// Reverse time order.
    out: Vec<(f64, f64, f64)>,
}

impl<R: Rng> Refiner<'_, R> {
    /// Walks the step `a -> b` of length `h` whose right end has future
    /// infimum `m`; returns the future infimum at the left end.
    fn step(&mut self, a: f64, b: f64, h: f64, m: f64, depth: usize) -> f64 {
        let low = a.min(b);
        let resolved = h.sqrt() / (low * low) <= self.band / self.resolution;
        let reachable = BridgeLaw::Bessel3.crossing_probability(a, b, band_top(m, 2.0 * self.band), h) > 1e-12;
        if depth >= self.max_depth || resolved || !reachable {
            let inside = BridgeLaw::Bessel3.minimum(a, b, h, self.rng.random());
            let m = m.min(inside).min(a);
            self.out.push((a, m, h));
            return m;
        }
        let mid = bessel3_midpoint(a, b, h, self.rng);
        let m = self.step(mid, b, 0.5 * h, m, depth + 1);
        self.step(a, mid, 0.5 * h, m, depth + 1)
    }
}

/// Refines `z[0..=last]` given the future infimum `inf_last` at the last
/// point.
pub fn refine_contact<R: Rng>(z: &[f64], steps: &[f64], inf_last: f64, band: f64, resolution: f64, rng: &mut R) -> RefinedPath {
    let last = steps.len();
    let mut r = Refiner { band, resolution, max_depth: 48, rng, out: Vec::with_capacity(2 * last) };
    let mut m = inf_last;
    for k in (0..last).rev() {
        m = r.step(z[k], z[k + 1], steps[k], m, 0);
    }
    let points_added = r.out.len() - last;
    let mut out = r.out;
    out.reverse();
    let mut path = RefinedPath { z: Vec::with_capacity(out.len() + 1), inf: Vec::with_capacity(out.len() + 1), steps: Vec::with_capacity(out.len()), points_added };
    for (zv, iv, h) in out {
        path.z.push(zv);
        path.inf.push(iv);
        path.steps.push(h);
    }
    path.z.push(z[last]);
    path.inf.push(inf_last);
    path
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationComparison {
    pub mean_open: f64,
    pub mean_closed: f64,
    pub mean_rhs: f64,
    pub se_rhs: f64,
    pub se_difference: f64,
    pub relative_error_open: f64,
    pub relative_error_closed: f64,
    /// Median over paths with a positive right side of the per-path
    /// relative error of the open estimate.
    pub median_path_relative_error: f64,
}

impl OccupationComparison {
    fn new(est: &[crate::formulas::LocalTimeEstimate]) -> Self {
        let n = est.len() as f64;
        let mean = |f: &dyn Fn(&crate::formulas::LocalTimeEstimate) -> f64| est.iter().map(f).sum::<f64>() / n;
        let (open, closed, rhs) = (mean(&|e| e.occupation_open), mean(&|e| e.occupation_closed), mean(&|e| e.rhs));
        let se = |f: &dyn Fn(&crate::formulas::LocalTimeEstimate) -> f64, m: f64| {
            (est.iter().map(|e| (f(e) - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        };
        let mut rel: Vec<f64> = est.iter().filter(|e| e.rhs > 0.0).map(|e| (e.occupation_open - e.rhs).abs() / e.rhs).collect();
        rel.sort_by(f64::total_cmp);
        Self {
            mean_open: open,
            mean_closed: closed,
            mean_rhs: rhs,
            se_rhs: se(&|e| e.rhs, rhs),
            se_difference: se(&|e| e.occupation_closed - e.rhs, closed - rhs),
            relative_error_open: (open - rhs).abs() / rhs.abs(),
            relative_error_closed: (closed - rhs).abs() / rhs.abs(),
            median_path_relative_error: rel.get(rel.len() / 2).copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalTimeSummary {
    pub n_paths: usize,
    pub eps: f64,
    /// Occupation read off the base grid only.
    pub base_grid: OccupationComparison,
    /// Occupation on the path refined near the contact set.
    pub refined: OccupationComparison,
    pub mean_points_added: f64,
    pub max_points_added: usize,
    /// Fraction of paths with `I_0 < 0.01`, which carry most of the mean.
    pub small_infimum_fraction: f64,
}

/// Occupation estimate of the local time at 0 of `e(Z) - e(I)` on `[0, 1]`
/// against `2 (e(I_1) - e(I_0))`, both averaged over paths.
pub fn localtime_summary(p: &PitmanParams) -> LocalTimeSummary {
    let model = ScaleModel::bes3();
    let grid = tail_grid(p.localtime_dt, p.tail_horizon, p.max_tail_dt);
    let one = grid_index(&grid, 1.0);
    let seed = p.seed.wrapping_add(1);
    let per = per_path(p.localtime_paths, |path| {
        let z = bes3_path(&model, &grid, p.z0, seed, path);
        let (i, _) = future_infimum(&z, &grid, p.crossing, seed, path);
        let base = local_time_identity(&model, &z, &i, &grid.steps()[..one], p.eps).expect("valid inputs");
        let mut rng = channel_rng(seed, REFINE_CHANNEL, path);
        let r = refine_contact(&z, &grid.steps()[..one], i[one], p.eps, p.localtime_resolution, &mut rng);
        let refined = local_time_identity(&model, &r.z, &r.inf, &r.steps, p.eps).expect("valid inputs");
        (base, refined, r.points_added, i[0] < 0.01)
    });
    let base: Vec<_> = per.iter().map(|x| x.0).collect();
    let refined: Vec<_> = per.iter().map(|x| x.1).collect();
    let n = per.len() as f64;
    LocalTimeSummary {
        n_paths: per.len(),
        eps: p.eps,
        base_grid: OccupationComparison::new(&base),
        refined: OccupationComparison::new(&refined),
        mean_points_added: per.iter().map(|x| x.2 as f64).sum::<f64>() / n,
        max_points_added: per.iter().map(|x| x.2).max().unwrap_or(0),
        small_infimum_fraction: per.iter().filter(|x| x.3).count() as f64 / n,
    }
}

pub fn pitman_spec() -> MartingaleTestSpec {
    MartingaleTestSpec::new(["Z_t", "I_t"])
}

pub fn run_pitman(p: &PitmanParams) -> CriterionOutcome {
    let data = pitman_data(p);
    let report = cond_mean_zero("2I - Z increments", &data.obs, &pitman_spec());
    let qv = qv_test("bracket of 2I - Z on [0, 1]", &data.qv, 1.0, p.qv_tolerance);
    let lt = localtime_summary(p);
    let n = data.truncation.len() as f64;
    let truncation = data.truncation.iter().sum::<f64>() / n;
    let qv_inf = data.qv_infimum_part.iter().sum::<f64>() / n;
    let checks = vec![
        Check::from_report(&report),
        Check::new(
            qv.name.clone(),
            qv.pass,
            format!("mean {:.5} +- {:.5}, relative error {:.4} (tolerance {}); infimum part {:.2e}", qv.mean, qv.se, qv.relative_error, qv.tolerance, qv_inf),
        ),
        Check::new(
            "local-time identity",
            lt.refined.relative_error_closed <= p.localtime_tolerance,
            format!(
                "occupation {:.4} vs {:.4} +- {:.4}, relative error {:.4}; base grid alone {:.4} (error {:.4})",
                lt.refined.mean_closed,
                lt.refined.mean_rhs,
                lt.refined.se_rhs,
                lt.refined.relative_error_closed,
                lt.base_grid.mean_closed,
                lt.base_grid.relative_error_closed
            ),
        ),
    ];
    CriterionOutcome::new(
        5,
        "future infimum of Bessel(3)",
        checks,
        json!({ "params": p, "mc": summary(&report), "qv": qv, "qv_infimum_part": qv_inf, "localtime": lt, "tail_truncation_bound": truncation }),
    )
    .with_tables(vec![("pitman_bins".into(), report.bins_csv())])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HonestParams {
    pub n_paths: usize,
    pub dt: f64,
    pub z0: f64,
    pub level: f64,
    pub tail_horizon: f64,
    pub max_tail_dt: f64,
    pub window_end: f64,
    pub seed: u64,
    pub macro_len: usize,
    pub azema_times: Vec<f64>,
    pub crossing: Crossing,
    pub quadrature: DriftQuadrature,
    /// `-1/Z` is only a local martingale. Observations start above this
    /// level and are stopped at the first grid point at or below it.
    pub localization: f64,
    pub max_censored: f64,
}

impl Default for HonestParams {
    fn default() -> Self {
        Self {
            n_paths: 50_000,
            dt: DEFAULT_DT,
            z0: 1.0,
            level: 0.5,
            tail_horizon: 200.0,
            max_tail_dt: 0.25,
            window_end: 1.0,
            seed: 16,
            macro_len: 8,
            azema_times: vec![0.25, 0.5, 0.75, 1.0],
            crossing: Crossing::Bridge,
            quadrature: DriftQuadrature::DEFAULT_BISECTION,
            localization: 0.25,
            max_censored: 0.05,
        }
    }
}

pub struct HonestData {
    pub before: Vec<Observation>,
    pub after: Vec<Observation>,
    pub azema: Vec<(f64, Vec<AzemaObservation>)>,
    pub censored: usize,
    pub n_paths: usize,
}

/// Last passage at `a` with the return after the horizon decided by a
/// Bernoulli draw; `Never` marks a censored path.
fn last_passage(z: &[f64], grid: &TimeGrid, a: f64, crossing: Crossing, seed: u64, path: u64) -> RandomTime {
    let z_h = *z.last().expect("nonempty");
    if z_h <= a || channel_rng(seed, TAIL_CHANNEL, path).random::<f64>() < a / z_h {
        return RandomTime::Never;
    }
    match crossing {
        Crossing::Grid => last_passage_path(z, grid, a),
        Crossing::Bridge => last_passage_bridge(z, grid, a, BridgeLaw::Bessel3, |_| 1.0, &mut channel_rng(seed, BRIDGE_CHANNEL, path)),
    }
}

pub fn honest_data(p: &HonestParams) -> HonestData {
    let model = ScaleModel::bes3();
    let grid = tail_grid(p.dt, p.tail_horizon, p.max_tail_dt);
    let end = window_end(&grid, p.window_end);
    let t = grid.times();
    let at: Vec<usize> = p.azema_times.iter().map(|&s| grid_index(&grid, s)).collect();
    let a = p.level;
    let per = per_path(p.n_paths, |path| {
        let z = bes3_path(&model, &grid, p.z0, p.seed, path);
        let lp = last_passage(&z, &grid, a, p.crossing, p.seed, path);
        let azema: Vec<AzemaObservation> = at
            .iter()
            .map(|&k| AzemaObservation { feature: z[k], survived: lp.after(t[k]), azema: honest_lp_azema(z[k], a).expect("z > 0") })
            .collect();
        let mut before = Vec::new();
        let mut after = Vec::new();
        if lp != RandomTime::Never {
            // steps with left index <= k start before the passage
            let last_before = lp.index();
            let side = |j: usize| if last_before.is_some_and(|k| j <= k) { Side::Before } else { Side::After };
            let before_rate = |_: f64, y: f64| honest_lp_drift(Side::Before, y, a).expect("z > 0");
            let after_rate = |_: f64, y: f64| honest_lp_drift(Side::After, a + y, a).unwrap_or(f64::NAN);
            let mut rng = channel_rng(p.seed, QUADRATURE_CHANNEL, path);
            for s in macro_starts(0, end, p.macro_len) {
                if z[s] <= p.localization {
                    continue;
                }
                let e = (s + 1..s + p.macro_len).find(|&j| z[j] <= p.localization).unwrap_or(s + p.macro_len);
                // before the passage Z is repelled from 0, after it from a
                let drift: f64 = (s..e)
                    .map(|j| {
                        let h = grid.steps()[j];
                        match side(j) {
                            Side::Before => repelled_integral(p.quadrature, t[j], h, z[j], z[j + 1], &before_rate, &mut rng),
                            Side::After => repelled_integral(p.quadrature, t[j], h, z[j] - a, z[j + 1] - a, &after_rate, &mut rng),
                        }
                    })
                    .sum();
                let o = Observation { features: [z[s], t[s]], raw: 1.0 / z[s] - 1.0 / z[e], drift };
                match side(s) {
                    Side::Before => before.push(o),
                    Side::After => after.push(o),
                }
            }
        }
        (before, after, azema, lp == RandomTime::Never)
    });
    let mut d = HonestData { before: Vec::new(), after: Vec::new(), azema: Vec::new(), censored: 0, n_paths: p.n_paths };
    let mut az = Vec::with_capacity(p.n_paths);
    for (b, a, obs, c) in per {
        d.before.extend(b);
        d.after.extend(a);
        az.push(obs);
        d.censored += usize::from(c);
    }
    d.azema = by_time(&p.azema_times, az);
    d
}

pub fn run_honest_azema(p: &HonestParams) -> CriterionOutcome {
    let d = honest_data(p);
    let az = azema_consistency("survival of the last passage", &d.azema, 20, 30, 3.0, 0.95);
    CriterionOutcome::new(6, "last passage of Bessel(3), survival", vec![azema_check(&az)], json!({ "params": p, "azema": az }))
        .with_tables(vec![("honest_azema_bins".into(), az.bins_csv())])
}

pub fn honest_spec() -> MartingaleTestSpec {
    MartingaleTestSpec::new(["Z_t", "t"])
}

pub fn run_honest(p: &HonestParams) -> CriterionOutcome {
    let d = honest_data(p);
    let az = azema_consistency("survival of the last passage", &d.azema, 20, 30, 3.0, 0.95);
    let before = cond_mean_zero("e(Z) before the last passage", &d.before, &honest_spec());
    let after = cond_mean_zero("e(Z) after the last passage", &d.after, &honest_spec());
    let censored = d.censored as f64 / d.n_paths as f64;
    let checks = vec![
        azema_check(&az),
        Check::from_report(&before),
        Check::from_report(&after),
        Check::new("censored paths", censored <= p.max_censored, format!("{censored:.4} of paths return below the level after the horizon")),
    ];
    CriterionOutcome::new(
        6,
        "last passage of Bessel(3)",
        checks,
        json!({ "params": p, "azema": az, "before": summary(&before), "after": summary(&after), "censored_fraction": censored }),
    )
    .with_tables(vec![("honest_before_bins".into(), before.bins_csv()), ("honest_after_bins".into(), after.bins_csv()), ("honest_azema_bins".into(), az.bins_csv())])
}
