//! Pathwise functionals: running supremum, future infimum, record times and
//! the random times used by the progressive and honest enlargements.
//!
//! The slice functions work on one path; the bundle functions map them over
//! a [`PathBundle`].

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use super::grid::TimeGrid;
use super::paths::PathBundle;
use super::rng::channel_rng;
use super::SimError;

/// Channel id for the unit exponentials of Cox times.
pub const COX_CHANNEL: u64 = 1;

/// A realized random time on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RandomTime {
    At { index: usize, time: f64 },
    /// Did not happen within the grid (`+inf`).
    Never,
    /// Happened before the first grid point (reported as time 0).
    BeforeGrid,
}

impl RandomTime {
    fn at(grid: &TimeGrid, index: usize) -> Self {
        Self::At { index, time: grid.times()[index] }
    }

    /// Numeric value with `Never = +inf` and `BeforeGrid = 0`.
    pub fn time(&self) -> f64 {
        match *self {
            Self::At { time, .. } => time,
            Self::Never => f64::INFINITY,
            Self::BeforeGrid => 0.0,
        }
    }

    pub fn index(&self) -> Option<usize> {
        match *self {
            Self::At { index, .. } => Some(index),
            _ => None,
        }
    }

    /// True unless the value is a sentinel.
    pub fn is_observed(&self) -> bool {
        matches!(self, Self::At { .. })
    }

    /// `{time > t}`.
    pub fn after(&self, t: f64) -> bool {
        self.time() > t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeTag {
    LastPassageLevel,
    EmeryXi,
    Cox,
    RecordTime,
}

/// One realized random time per path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomTimeSample {
    pub tag: TimeTag,
    pub times: Vec<RandomTime>,
}

impl RandomTimeSample {
    /// Fraction of paths carrying a sentinel.
    pub fn sentinel_fraction(&self) -> f64 {
        let n = self.times.iter().filter(|t| !t.is_observed()).count();
        n as f64 / self.times.len().max(1) as f64
    }
}

/// `U_k = max_{j <= k} x_j`.
pub fn running_sup_path(x: &[f64]) -> Vec<f64> {
    x.iter()
        .scan(f64::NEG_INFINITY, |m, &v| {
            *m = m.max(v);
            Some(*m)
        })
        .collect()
}

/// `I_k = min_{k <= j < len} x_j`.
pub fn suffix_min_path(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    let mut m = f64::INFINITY;
    for (o, &v) in out.iter_mut().zip(x).rev() {
        m = m.min(v);
        *o = m;
    }
    out
}

pub fn running_sup(pb: &PathBundle) -> Result<PathBundle, SimError> {
    pb.map_paths(running_sup_path)
}

/// Future infimum over `[t, tail_horizon]`, returned on the grid points up
/// to `tail_horizon`.
pub fn future_inf(pb: &PathBundle, tail_horizon: f64) -> Result<PathBundle, SimError> {
    let last = pb.grid().index_of(tail_horizon).ok_or_else(|| SimError::InvalidParameter {
        name: "tail_horizon",
        reason: format!("{tail_horizon} is not a grid point of a bundle with horizon {}", pb.horizon()),
    })?;
    pb.truncate(last)?.map_paths(suffix_min_path)
}

/// For every index `k`, the first index `j > k` with `sup_j > sup_k`.
pub fn record_indices(sup: &[f64]) -> Vec<Option<usize>> {
    let mut out = vec![None; sup.len()];
    let mut next = None;
    for k in (0..sup.len()).rev() {
        out[k] = next;
        if k > 0 && sup[k] > sup[k - 1] {
            next = Some(k);
        }
    }
    out
}

/// First grid time after `u` at which the running supremum strictly
/// increases. `sup` must already be a running supremum.
pub fn record_time(pb_sup: &PathBundle, u: f64) -> Result<RandomTimeSample, SimError> {
    let grid = pb_sup.grid();
    let k = grid.index_of(u).ok_or_else(|| SimError::InvalidParameter {
        name: "u",
        reason: format!("{u} is not a grid point"),
    })?;
    let times = pb_sup
        .paths()
        .map(|s| match s[k + 1..].iter().position(|&v| v > s[k]) {
            Some(off) => RandomTime::at(grid, k + 1 + off),
            None => RandomTime::Never,
        })
        .collect();
    Ok(RandomTimeSample { tag: TimeTag::RecordTime, times })
}

/// Last zero of `W_1 - 2 W_t` on `[0, 1]`. A crossing inside a step is
/// assigned to the step's right endpoint; a path with no crossing gives 0.
pub fn emery_xi_path(w: &[f64], grid: &TimeGrid) -> RandomTime {
    let one = grid.index_of(1.0).expect("grid must contain t = 1");
    let w1 = w[one];
    let g = |k: usize| w1 - 2.0 * w[k];
    for k in (1..=one).rev() {
        let (prev, cur) = (g(k - 1), g(k));
        let strict = prev * cur < 0.0;
        let touch = cur == 0.0 && prev != 0.0 && k < one;
        if strict || touch {
            return RandomTime::at(grid, k);
        }
    }
    RandomTime::at(grid, 0)
}

pub fn emery_xi(pb: &PathBundle) -> Result<RandomTimeSample, SimError> {
    if pb.grid().index_of(1.0).is_none() {
        return Err(SimError::InvalidParameter {
            name: "horizon",
            reason: "the grid must contain t = 1".into(),
        });
    }
    let times = pb.paths().map(|w| emery_xi_path(w, pb.grid())).collect();
    Ok(RandomTimeSample { tag: TimeTag::EmeryXi, times })
}

/// Last grid index with `z <= a`. `BeforeGrid` when the path never goes
/// down to `a`; `Never` when it is still at or below `a` at the horizon, so
/// the passage lies beyond the grid.
pub fn last_passage_path(z: &[f64], grid: &TimeGrid, a: f64) -> RandomTime {
    match z.iter().rposition(|&v| v <= a) {
        None => RandomTime::BeforeGrid,
        Some(k) if k + 1 == z.len() => RandomTime::Never,
        Some(k) => RandomTime::at(grid, k),
    }
}

pub fn last_passage_level(pb: &PathBundle, a: f64) -> Result<RandomTimeSample, SimError> {
    if !(a > 0.0) {
        return Err(SimError::InvalidParameter { name: "a", reason: format!("must be positive, got {a}") });
    }
    let times = pb.paths().map(|z| last_passage_path(z, pb.grid(), a)).collect();
    Ok(RandomTimeSample { tag: TimeTag::LastPassageLevel, times })
}

/// First grid index where the left-point integral of `intensity` reaches
/// `threshold`.
pub fn cox_time_path<F: Fn(f64) -> f64>(z: &[f64], grid: &TimeGrid, intensity: F, threshold: f64) -> RandomTime {
    let mut acc = 0.0;
    for (k, &dt) in grid.steps().iter().enumerate() {
        acc += intensity(z[k]) * dt;
        if acc >= threshold {
            return RandomTime::at(grid, k + 1);
        }
    }
    RandomTime::Never
}

/// Unit exponential threshold for path `i` of a Cox construction.
pub fn cox_threshold(seed: u64, path: u64) -> f64 {
    channel_rng(seed, COX_CHANNEL, path).sample(Exp1)
}

/// Cox times `inf{t: int_0^t intensity(Z_s) ds >= E}` with independent unit
/// exponentials `E` drawn from `seed`.
pub fn cox_time<F>(pb: &PathBundle, intensity: F, seed: u64) -> Result<RandomTimeSample, SimError>
where
    F: Fn(f64) -> f64,
{
    let mut times = Vec::with_capacity(pb.n_paths());
    for (i, z) in pb.paths().enumerate() {
        if let Some(bad) = z.iter().map(|&v| intensity(v)).find(|l| !(*l >= 0.0)) {
            return Err(SimError::InvalidParameter { name: "intensity", reason: format!("negative or NaN value {bad}") });
        }
        times.push(cox_time_path(z, pb.grid(), &intensity, cox_threshold(seed, i as u64)));
    }
    Ok(RandomTimeSample { tag: TimeTag::Cox, times })
}

/// Channel id for sub-grid bridge draws.
pub const BRIDGE_CHANNEL: u64 = 2;
/// Channel id for draws that close a path beyond its horizon.
pub const TAIL_CHANNEL: u64 = 3;

/// Law of a path between two grid points, used to look inside a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeLaw {
    Brownian,
    /// Brownian bridge conditioned to stay positive, which is the bridge of
    /// Bessel(3).
    Bessel3,
}

impl BridgeLaw {
    /// `P[min <= level]` for a bridge from `a` to `b` with total variance
    /// `var`.
    pub fn crossing_probability(self, a: f64, b: f64, level: f64, var: f64) -> f64 {
        let (da, db) = (a - level, b - level);
        if da * db <= 0.0 {
            return 1.0;
        }
        let hit = (-2.0 * da * db / var).exp();
        match self {
            Self::Brownian => hit,
            Self::Bessel3 if level <= 0.0 => 0.0,
            Self::Bessel3 => {
                // -expm1 keeps precision when the zero level is far away
                let zero = (-2.0 * a * b / var).exp();
                (hit - zero) / -(-2.0 * a * b / var).exp_m1()
            }
        }
    }

    /// Minimum of the bridge sampled by inversion from the uniform `u`.
    pub fn minimum(self, a: f64, b: f64, var: f64, u: f64) -> f64 {
        let q = match self {
            Self::Brownian => u,
            Self::Bessel3 => {
                let zero = (-2.0 * a * b / var).exp();
                u * (1.0 - zero) + zero
            }
        };
        let disc = ((b - a) * (b - a) - 2.0 * var * q.ln()).max(0.0);
        (0.5 * (a + b - disc.sqrt())).max(match self {
            Self::Brownian => f64::NEG_INFINITY,
            Self::Bessel3 => 0.0,
        })
    }
}

/// Value at the middle of a Bessel(3) bridge from `a` to `b` over a step of
/// length `h`, built as the norm of a three-dimensional Brownian bridge
/// whose end direction is drawn from its conditional law given the norms.
pub fn bessel3_midpoint<R: Rng>(a: f64, b: f64, h: f64, rng: &mut R) -> f64 {
    let kappa = a * b / h;
    let u: f64 = rng.random();
    // cosine of the angle between the end points: density ∝ exp(kappa cos)
    let cos = if kappa > 1e-12 {
        (1.0 + (-(1.0 - u) * -(-2.0 * kappa).exp_m1()).ln_1p() / kappa).clamp(-1.0, 1.0)
    } else {
        2.0 * u - 1.0
    };
    let sin = (1.0 - cos * cos).max(0.0).sqrt();
    let sd = (0.25 * h).sqrt();
    let n: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
    let x = 0.5 * (a + b * cos) + sd * n[0];
    let y = 0.5 * b * sin + sd * n[1];
    let z = sd * n[2];
    (x * x + y * y + z * z).sqrt()
}

/// Minimum of a Brownian bridge from `a` to `b` with total variance `var`,
/// sampled by inversion from the uniform `u`.
pub fn bridge_minimum(a: f64, b: f64, var: f64, u: f64) -> f64 {
    BridgeLaw::Brownian.minimum(a, b, var, u)
}

/// Probability that a Brownian bridge from `a` to `b` with total variance
/// `var` touches `level`.
pub fn bridge_crossing_probability(a: f64, b: f64, level: f64, var: f64) -> f64 {
    BridgeLaw::Brownian.crossing_probability(a, b, level, var)
}

/// Future infimum that also sees the sub-grid minima of each step, drawn
/// from bridges of law `law` with local volatility `vol`. `beyond` is the
/// infimum after the last grid point, if known.
pub fn future_inf_bridge<R: Rng, V: Fn(f64) -> f64>(
    z: &[f64],
    grid: &TimeGrid,
    law: BridgeLaw,
    vol: V,
    beyond: Option<f64>,
    rng: &mut R,
) -> Vec<f64> {
    let n = z.len();
    let mut out = vec![0.0; n];
    let mut m = beyond.unwrap_or(f64::INFINITY).min(z[n - 1]);
    out[n - 1] = m;
    // uniforms are drawn forward so the k-th step always uses the k-th draw
    let us: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
    for k in (0..n - 1).rev() {
        let s = vol(z[k]);
        let low = law.minimum(z[k], z[k + 1], s * s * grid.steps()[k], us[k]);
        m = m.min(low).min(z[k]);
        out[k] = m;
    }
    out
}

/// [`emery_xi_path`] that also detects crossings hidden inside a step, by
/// sampling the Brownian bridge between grid values.
pub fn emery_xi_bridge<R: Rng>(w: &[f64], grid: &TimeGrid, rng: &mut R) -> RandomTime {
    let one = grid.index_of(1.0).expect("grid must contain t = 1");
    let level = 0.5 * w[one];
    let us: Vec<f64> = (0..one).map(|_| rng.random::<f64>()).collect();
    for k in (1..=one).rev() {
        let (prev, cur) = (w[k - 1] - level, w[k] - level);
        let crossed = if prev * cur < 0.0 || (cur == 0.0 && prev != 0.0 && k < one) {
            true
        } else {
            us[k - 1] < bridge_crossing_probability(w[k - 1], w[k], level, grid.steps()[k - 1])
        };
        if crossed {
            return RandomTime::at(grid, k);
        }
    }
    RandomTime::at(grid, 0)
}

/// [`last_passage_path`] that also detects dips below `a` inside a step.
/// The returned index is the start of the step holding the passage.
pub fn last_passage_bridge<R: Rng, V: Fn(f64) -> f64>(
    z: &[f64],
    grid: &TimeGrid,
    a: f64,
    law: BridgeLaw,
    vol: V,
    rng: &mut R,
) -> RandomTime {
    let n = z.len();
    if z[n - 1] <= a {
        return RandomTime::Never;
    }
    let us: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
    for k in (0..n - 1).rev() {
        if z[k] <= a {
            return RandomTime::at(grid, k);
        }
        let s = vol(z[k]);
        if us[k] < law.crossing_probability(z[k], z[k + 1], a, s * s * grid.steps()[k]) {
            return RandomTime::at(grid, k);
        }
    }
    RandomTime::BeforeGrid
}

/// Realized quadratic variation `sum (x_{k+1} - x_k)^2` over the first
/// `steps` steps.
pub fn realized_qv(x: &[f64], steps: usize) -> f64 {
    x[..=steps].windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::paths::gen_brownian;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::uniform(1.0 / n as f64, 1.0).unwrap()
    }

    #[test]
    fn future_infimum_of_a_simulated_bundle() {
        let pb = crate::simulate::gen_bes3(20, 0.0625, 8.0, 1.0, 4).unwrap();
        let inf = future_inf(&pb, 8.0).unwrap();
        assert_eq!(inf.initial(), None);
        for (z, i) in pb.paths().zip(inf.paths()) {
            assert!(i[0] <= z[0] && i.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(i.last(), z.last());
        }
    }

    #[test]
    fn hand_path_sup_and_inf() {
        let x = [0.0, 1.0, -1.0, 2.0];
        assert_eq!(running_sup_path(&x), vec![0.0, 1.0, 1.0, 2.0]);
        assert_eq!(suffix_min_path(&x), vec![-1.0, -1.0, -1.0, 2.0]);
        let up = [0.0, 0.5, 1.0];
        assert_eq!(running_sup_path(&up), up.to_vec());
        assert_eq!(suffix_min_path(&up), up.to_vec());
        let c = [2.0; 4];
        assert_eq!(running_sup_path(&c), c.to_vec());
        assert_eq!(suffix_min_path(&c), c.to_vec());
    }

    #[test]
    fn suffix_min_is_reversed_running_min() {
        let pb = gen_brownian(20, 1.0 / 64.0, 1.0, 4).unwrap();
        for p in pb.paths() {
            let rev: Vec<f64> = p.iter().rev().map(|v| -v).collect();
            let mut dual: Vec<f64> = running_sup_path(&rev).into_iter().map(|v| -v).collect();
            dual.reverse();
            assert_eq!(suffix_min_path(p), dual);
        }
    }

    #[test]
    fn record_times_by_hand() {
        let sup = running_sup_path(&[0.0, 1.0, 0.5, 0.8, 1.5, 1.2]);
        let r = record_indices(&sup);
        assert_eq!(r, vec![Some(1), Some(4), Some(4), Some(4), None, None]);
        let g = TimeGrid::uniform(0.2, 1.0).unwrap();
        let pb = PathBundle::from_values(g, 0, Some(0.0), sup).unwrap();
        let s = record_time(&pb, 0.2).unwrap();
        assert_eq!(s.times[0].index(), Some(4));
        assert_eq!(record_time(&pb, 0.8).unwrap().times[0], RandomTime::Never);
        let inc = PathBundle::from_values(TimeGrid::uniform(0.25, 1.0).unwrap(), 0, Some(0.0), vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(record_time(&inc, 0.5).unwrap().times[0].time(), 0.75);
    }

    #[test]
    fn emery_xi_by_hand() {
        let g = grid(4);
        // W_1 = 0 and W starts at 0: no interior crossing.
        assert_eq!(emery_xi_path(&[0.0, 1.0, 2.0, 1.0, 0.0], &g).time(), 0.0);
        // W_1 = 1; W_t - 1/2 changes sign only between t = 0.25 and 0.5.
        assert_eq!(emery_xi_path(&[0.0, 0.2, 0.9, 0.8, 1.0], &g).index(), Some(2));
    }

    #[test]
    fn last_passage_conventions() {
        let g = grid(4);
        assert_eq!(last_passage_path(&[1.0, 2.0, 3.0, 4.0, 5.0], &g, 0.5), RandomTime::BeforeGrid);
        assert_eq!(last_passage_path(&[1.0, 0.4, 0.6, 0.45, 2.0], &g, 0.5).index(), Some(3));
        assert_eq!(last_passage_path(&[1.0, 0.4, 0.6, 0.45, 0.3], &g, 0.5), RandomTime::Never);
    }

    #[test]
    fn zero_intensity_never_fires() {
        let pb = gen_brownian(100, 1.0 / 64.0, 1.0, 1).unwrap();
        let s = cox_time(&pb, |_| 0.0, 9).unwrap();
        assert!(s.times.iter().all(|t| *t == RandomTime::Never));
        assert!(cox_time(&pb, |_| -1.0, 9).is_err());
    }

    #[test]
    fn constant_intensity_gives_exponential_survival() {
        let n = 20_000;
        let lambda = 1.3;
        let pb = gen_brownian(n, 1.0 / 256.0, 1.0, 2).unwrap();
        let s = cox_time(&pb, |_| lambda, 77).unwrap();
        for t in [0.25, 0.5, 1.0] {
            let p = s.times.iter().filter(|r| r.after(t)).count() as f64 / n as f64;
            let q = (-lambda * t).exp();
            let se = (q * (1.0 - q) / n as f64).sqrt();
            assert!((p - q).abs() < 3.0 * se, "t = {t}: {p} vs {q}");
        }
    }

    #[test]
    fn bridge_helpers() {
        assert_eq!(bridge_crossing_probability(1.0, -1.0, 0.0, 0.1), 1.0);
        assert!((bridge_crossing_probability(1.0, 2.0, 0.0, 1.0) - (-4.0f64).exp()).abs() < 1e-15);
        // the minimum never exceeds either endpoint
        for u in [1e-9, 0.3, 0.999] {
            assert!(bridge_minimum(0.5, 0.7, 0.01, u) <= 0.5);
        }
        // P[min <= level] from inversion matches the crossing probability
        let (a, b, var, level) = (1.0, 1.2, 0.05, 0.9);
        let n = 200_000;
        let mut rng = crate::simulate::rng::path_rng(1, 0);
        let hits = (0..n).filter(|_| bridge_minimum(a, b, var, rng.random()) <= level).count();
        let p = bridge_crossing_probability(a, b, level, var);
        assert!((hits as f64 / n as f64 - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn positive_bridge_is_the_conditioned_brownian_bridge() {
        let (a, b, var) = (0.05, 0.08, 0.01);
        let law = BridgeLaw::Bessel3;
        assert_eq!(law.crossing_probability(a, b, 0.0, var), 0.0);
        assert!((law.crossing_probability(a, b, 0.05, var) - 1.0).abs() < 1e-15);
        // oracle: rejection sampling of Brownian bridge minima above zero
        let mut rng = crate::simulate::rng::path_rng(2, 0);
        let (mut kept, mut below) = (0usize, 0usize);
        let level = 0.03;
        while kept < 100_000 {
            let m = bridge_minimum(a, b, var, rng.random());
            if m > 0.0 {
                kept += 1;
                below += usize::from(m <= level);
            }
        }
        let p = law.crossing_probability(a, b, level, var);
        assert!((below as f64 / kept as f64 - p).abs() < 4.0 * (p * (1.0 - p) / kept as f64).sqrt());
        let draws = (0..100_000).map(|_| law.minimum(a, b, var, rng.random())).collect::<Vec<_>>();
        assert!(draws.iter().all(|&m| m >= 0.0 && m <= a));
        let frac = draws.iter().filter(|&&m| m <= level).count() as f64 / draws.len() as f64;
        assert!((frac - p).abs() < 4.0 * (p * (1.0 - p) / 1e5).sqrt());
    }

    #[test]
    fn bessel3_midpoint_matches_three_dimensional_paths() {
        // oracle: norm of a 3D Brownian path sampled at h/2 and h
        let (a, h) = (0.3f64, 0.5f64);
        let mut rng = crate::simulate::rng::path_rng(4, 0);
        let n = 200_000;
        let (mut true_sum, mut true_sq, mut ours_sum, mut ours_sq) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let mut p = [a, 0.0, 0.0];
            let mut half = 0.0;
            for step in 0..2 {
                for c in &mut p {
                    *c += (0.5 * h).sqrt() * rng.sample::<f64, _>(StandardNormal);
                }
                if step == 0 {
                    half = p.iter().map(|c| c * c).sum::<f64>().sqrt();
                }
            }
            let b = p.iter().map(|c| c * c).sum::<f64>().sqrt();
            let ours = bessel3_midpoint(a, b, h, &mut rng);
            true_sum += half;
            true_sq += half * half;
            ours_sum += ours;
            ours_sq += ours * ours;
        }
        let nf = n as f64;
        let (tm, om) = (true_sum / nf, ours_sum / nf);
        let tv = true_sq / nf - tm * tm;
        assert!((tm - om).abs() < 4.0 * (2.0 * tv / nf).sqrt(), "{tm} vs {om}");
        assert!((tv - (ours_sq / nf - om * om)).abs() < 0.02 * tv);
        // far from zero the bridge is Brownian
        let mid: Vec<f64> = (0..n).map(|_| bessel3_midpoint(50.0, 50.0, 0.01, &mut rng)).collect();
        let m = mid.iter().sum::<f64>() / nf;
        let v = mid.iter().map(|x| (x - m).powi(2)).sum::<f64>() / nf;
        assert!((m - 50.0).abs() < 1e-3 && (v - 0.0025).abs() < 1e-4, "{m} {v}");
    }

    #[test]
    fn bridge_refinements_never_move_the_wrong_way() {
        let g = grid(64);
        let pb = gen_brownian(200, 1.0 / 64.0, 1.0, 12).unwrap();
        for (i, w) in pb.paths().enumerate() {
            let mut rng = crate::simulate::rng::path_rng(3, i as u64);
            assert!(emery_xi_bridge(w, &g, &mut rng).time() >= emery_xi_path(w, &g).time());
            let z: Vec<f64> = w.iter().map(|v| v + 2.0).collect();
            let fi = future_inf_bridge(&z, &g, BridgeLaw::Brownian, |_| 1.0, None, &mut rng);
            assert!(fi.iter().zip(suffix_min_path(&z)).all(|(b, s)| *b <= s));
            assert!(fi.windows(2).all(|p| p[0] <= p[1]));
            let lp = last_passage_bridge(&z, &g, 1.8, BridgeLaw::Brownian, |_| 1.0, &mut rng);
            match (lp, last_passage_path(&z, &g, 1.8)) {
                (RandomTime::At { index: b, .. }, RandomTime::At { index: s, .. }) => assert!(b >= s),
                (RandomTime::BeforeGrid, other) => assert_eq!(other, RandomTime::BeforeGrid),
                _ => {}
            }
        }
    }

    #[test]
    fn brownian_qv_is_close_to_time() {
        let pb = gen_brownian(2000, 1.0 / 512.0, 1.0, 6).unwrap();
        let qv: Vec<f64> = pb.paths().map(|p| realized_qv(p, 512)).collect();
        let mean = qv.iter().sum::<f64>() / qv.len() as f64;
        let var = qv.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (qv.len() as f64 - 1.0);
        assert!((mean - 1.0).abs() < 3.0 * (var / qv.len() as f64).sqrt());
    }
}
