//! Runners for the verification experiments. Each runner is a plain
//! function of a parameter struct whose `Default` is the reference
//! configuration, and returns a [`CriterionOutcome`] with every sub-check.

pub mod bessel;
pub mod brownian;
pub mod calibration;
pub mod exact;
pub mod fa1;
pub mod supremum;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::mctest::{AzemaObservation, AzemaReport, Observation, TestReport, Verdict};
use crate::simulate::functionals::bessel3_midpoint;
use crate::simulate::TimeGrid;

/// One named sub-check of a criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub summary: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, summary: impl Into<String>) -> Self {
        Self { name: name.into(), verdict: Verdict::from_pass(pass), summary: summary.into() }
    }

    pub fn with_verdict(name: impl Into<String>, verdict: Verdict, summary: impl Into<String>) -> Self {
        Self { name: name.into(), verdict, summary: summary.into() }
    }

    pub(crate) fn from_report(r: &TestReport) -> Self {
        let control = match r.control.detection_fraction {
            Some(f) => format!("raw detection {:.3} of {} eligible bins", f, r.control.eligible_bins),
            None => "no bin with a detectable drift".into(),
        };
        Self::with_verdict(
            r.name.clone(),
            if r.verdict == Verdict::Pass && !r.pass { Verdict::Fail } else { r.verdict },
            format!(
                "{}/{} bins within band ({:.4}), max |z| {:.2}, {} observations; {}",
                r.bins_within_band, r.occupied_bins, r.fraction_within_band, r.max_abs_z, r.n_observations, control
            ),
        )
    }
}

/// Result of one criterion with its sub-checks and data for the report.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: String,
    pub verdict: Verdict,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
    /// Per-bin tables, keyed by file stem.
    #[serde(skip)]
    pub tables: Vec<(String, String)>,
}

impl CriterionOutcome {
    /// Combines checks: any failure fails, otherwise any inconclusive or
    /// degenerate check makes the whole criterion inconclusive.
    pub fn new(id: u8, title: &str, checks: Vec<Check>, details: serde_json::Value) -> Self {
        let verdict = if checks.iter().any(|c| c.verdict == Verdict::Fail) {
            Verdict::Fail
        } else if checks.iter().all(|c| c.verdict == Verdict::Pass) {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        };
        Self { id, title: title.into(), verdict, pass: verdict.is_pass(), checks, details, tables: Vec::new() }
    }

    pub fn with_tables(mut self, tables: Vec<(String, String)>) -> Self {
        self.tables = tables;
        self
    }

    /// One line per check plus a headline.
    pub fn render(&self) -> String {
        let mut s = format!("criterion {} [{}] {}\n", self.id, self.verdict, self.title);
        for c in &self.checks {
            s.push_str(&format!("  [{}] {}: {}\n", c.verdict, c.name, c.summary));
        }
        s
    }
}

/// Sub-check for an Azéma report.
pub(crate) fn azema_check(az: &AzemaReport) -> Check {
    Check::with_verdict(
        "azema supermartingale",
        if az.verdict == Verdict::Pass && !az.pass { Verdict::Fail } else { az.verdict },
        format!("{:.4} of {} bins within band, {} bins dropped", az.fraction_within_band, az.occupied_bins, az.dropped_bins.len()),
    )
}

/// Regroups per-path Azéma observations, one per time, by time.
pub(crate) fn by_time(times: &[f64], per_path: Vec<Vec<AzemaObservation>>) -> Vec<(f64, Vec<AzemaObservation>)> {
    let mut out: Vec<(f64, Vec<AzemaObservation>)> = times.iter().map(|&t| (t, Vec::with_capacity(per_path.len()))).collect();
    for obs in per_path {
        for (slot, o) in out.iter_mut().zip(obs) {
            slot.1.push(o);
        }
    }
    out
}

/// Maps `f` over path indices in parallel, keeping index order.
pub(crate) fn per_path<T: Send>(n: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..n as u64).into_par_iter().map(f).collect()
}

/// Concatenates per-path observation lists in path order.
pub(crate) fn flatten<T>(parts: Vec<Vec<T>>) -> Vec<T> {
    parts.into_iter().flatten().collect()
}

/// Start indices of aligned macro steps of `len` fine steps that fit in
/// `[lo, hi]` and start at or after `lo`.
pub(crate) fn macro_starts(lo: usize, hi: usize, len: usize) -> impl Iterator<Item = usize> {
    let first = lo.div_ceil(len) * len;
    (first..).step_by(len).take_while(move |s| s + len <= hi)
}

/// Left-point sum `sum_{j in [s, s+len)} rate(j) dt_j`.
pub(crate) fn riemann(grid: &TimeGrid, s: usize, len: usize, rate: impl Fn(usize) -> f64) -> f64 {
    (s..s + len).map(|j| rate(j) * grid.steps()[j]).sum()
}

/// How the drift is integrated over each fine step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftQuadrature {
    /// Left-point rate times the step.
    LeftPoint,
    /// Trapezoid rule on sub-steps obtained by bisecting a Bessel(3)
    /// bridge of the distance to the repelling level, until that distance
    /// is at least `resolution` sub-step standard deviations at both ends.
    Bisection { resolution: f64, max_depth: usize },
}

impl DriftQuadrature {
    pub const DEFAULT_BISECTION: Self = Self::Bisection { resolution: 3.0, max_depth: 30 };
}

/// Channel id for the bisection draws of drift integrals.
pub(crate) const QUADRATURE_CHANNEL: u64 = 5;

/// Integral of `rate(t, y)` over `[t, t + h]` for a distance `y > 0` that
/// is locally a Bessel(3) bridge from `ya` to `yb`.
pub(crate) fn repelled_integral<R: Rng, F: Fn(f64, f64) -> f64>(
    q: DriftQuadrature,
    t: f64,
    h: f64,
    ya: f64,
    yb: f64,
    rate: &F,
    rng: &mut R,
) -> f64 {
    match q {
        DriftQuadrature::LeftPoint => h * rate(t, ya),
        DriftQuadrature::Bisection { resolution, max_depth } => bisect(t, h, ya, yb, rate, resolution, max_depth, rng),
    }
}

#[allow(clippy::too_many_arguments)]
fn bisect<R: Rng, F: Fn(f64, f64) -> f64>(t: f64, h: f64, ya: f64, yb: f64, rate: &F, resolution: f64, depth: usize, rng: &mut R) -> f64 {
    let floor = resolution * h.sqrt();
    if ya >= floor && yb >= floor {
        return 0.5 * h * (rate(t, ya) + rate(t + h, yb));
    }
    if depth == 0 {
        // the left end may sit on the level itself
        return if ya > 0.0 { 0.5 * h * (rate(t, ya) + rate(t + h, yb)) } else { h * rate(t + h, yb) };
    }
    let mid = bessel3_midpoint(ya, yb, h, rng);
    let half = 0.5 * h;
    bisect(t, half, ya, mid, rate, resolution, depth - 1, rng) + bisect(t + half, half, mid, yb, rate, resolution, depth - 1, rng)
}

/// Drops the drift so the observation carries the raw increment only.
pub(crate) fn uncompensated(obs: &[Observation]) -> Vec<Observation> {
    obs.iter().map(|o| Observation { drift: 0.0, ..*o }).collect()
}

pub(crate) fn grid_index(grid: &TimeGrid, t: f64) -> usize {
    grid.index_of(t).unwrap_or_else(|| panic!("{t} is not a grid point"))
}

/// Last grid index inside a window ending at `t`.
pub(crate) fn window_end(grid: &TimeGrid, t: f64) -> usize {
    grid.floor_index(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn macro_steps_are_aligned_and_inside() {
        assert_eq!(macro_starts(0, 32, 8).collect::<Vec<_>>(), vec![0, 8, 16, 24]);
        assert_eq!(macro_starts(3, 31, 8).collect::<Vec<_>>(), vec![8, 16]);
        assert_eq!(macro_starts(8, 16, 8).collect::<Vec<_>>(), vec![8]);
        assert_eq!(macro_starts(9, 16, 8).count(), 0);
    }

    #[test]
    fn bisection_integrates_the_bessel_inverse() {
        // oracle: E[1/Z] for Bessel(3) from 0 is sqrt(2 / (pi t)), so the
        // integral of 1/Z over [0, h] has mean 2 sqrt(2 h / pi)
        let h = 1.0f64;
        let q = DriftQuadrature::Bisection { resolution: 3.0, max_depth: 30 };
        let mut rng = crate::simulate::rng::path_rng(9, 0);
        let n = 20_000;
        let mut acc = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let end: f64 = (0..3).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal).powi(2)).sum::<f64>().sqrt();
            let v = repelled_integral(q, 0.0, h, 0.0, end, &|_, y| 1.0 / y, &mut rng);
            acc += v;
            sq += v * v;
        }
        let mean = acc / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = 2.0 * (2.0 * h / std::f64::consts::PI).sqrt();
        assert!((mean - exact).abs() < 4.0 * se + 0.01 * exact, "{mean} vs {exact} +- {se}");
    }

    #[test]
    fn verdicts_combine() {
        let p = Check::new("a", true, "");
        let f = Check::new("b", false, "");
        let i = Check::with_verdict("c", Verdict::Inconclusive, "");
        let v = |c: Vec<Check>| CriterionOutcome::new(1, "t", c, serde_json::Value::Null).verdict;
        assert_eq!(v(vec![p.clone(), p.clone()]), Verdict::Pass);
        assert_eq!(v(vec![p.clone(), i.clone()]), Verdict::Inconclusive);
        assert_eq!(v(vec![i, f, p]), Verdict::Fail);
    }

    #[test]
    fn reports_do_not_depend_on_the_worker_count() {
        let p = brownian::JacodParams { n_paths: 400, dt: 1.0 / 64.0, ..Default::default() };
        let on = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let out = pool.install(|| brownian::run_jacod(&p));
            (serde_json::to_string(&out).unwrap(), out.tables)
        };
        assert_eq!(on(1), on(3));
    }
}
