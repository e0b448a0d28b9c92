//! Path generators.
//!
//! Each generator has a per-path `fill_*` form that writes one path into a
//! caller buffer from that path's own stream, and a bundle form that runs
//! the fill over all paths in parallel. Both produce the same numbers.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::grid::TimeGrid;
use super::rng::path_rng;
use super::{require, SimError};

/// A seeded set of discretized paths sharing one time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    grid: TimeGrid,
    n_paths: usize,
    seed: u64,
    /// Common starting value; `None` for derived bundles whose paths start
    /// apart, such as the future infimum.
    initial: Option<f64>,
    values: Vec<f64>,
}

impl PathBundle {
    /// Assemble a bundle from row-major path values. A declared `initial`
    /// must be the first value of every path.
    pub fn from_values(grid: TimeGrid, seed: u64, initial: Option<f64>, values: Vec<f64>) -> Result<Self, SimError> {
        let width = grid.len();
        require(values.len().is_multiple_of(width), "values", || {
            format!("{} values do not fill rows of {width}", values.len())
        })?;
        let n_paths = values.len() / width;
        require(n_paths > 0, "n_paths", || "bundle has no paths".into())?;
        if let Some(x0) = initial {
            require(values.chunks(width).all(|p| p[0] == x0), "initial", || format!("every path must start at {x0}"))?;
        }
        Ok(Self { grid, n_paths, seed, initial, values })
    }

    /// Build by running `fill(path_index, buffer)` for every path.
    pub fn generate<F>(grid: TimeGrid, n_paths: usize, seed: u64, initial: f64, fill: F) -> Result<Self, SimError>
    where
        F: Fn(u64, &mut [f64]) + Sync,
    {
        require(n_paths > 0, "n_paths", || "must be positive".into())?;
        let width = grid.len();
        let mut values = vec![0.0; width * n_paths];
        values
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| fill(i as u64, row));
        Ok(Self { grid, n_paths, seed, initial: Some(initial), values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.grid.steps()[0]
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn initial(&self) -> Option<f64> {
        self.initial
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let w = self.grid.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn paths(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks(self.grid.len())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values of every path at grid index `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.paths().map(|p| p[k]).collect()
    }

    /// Apply `f` to every path, keeping grid and seed. The result declares
    /// an initial value only if all its paths share one.
    pub fn map_paths<F>(&self, f: F) -> Result<Self, SimError>
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        let values = self.values.par_chunks(self.grid.len()).map(&f).collect::<Vec<_>>().concat();
        let initial = common_start(&values, self.grid.len());
        Self::from_values(self.grid.clone(), self.seed, initial, values)
    }

    /// Restrict every path to grid indices `0..=last`.
    pub fn truncate(&self, last: usize) -> Result<Self, SimError> {
        let times = &self.grid.times()[..=last];
        let grid = TimeGrid::from_points(times.to_vec())?;
        let values = self.paths().flat_map(|p| p[..=last].iter().copied()).collect();
        Self::from_values(grid, self.seed, self.initial, values)
    }
}

/// First value shared by every row of width `width`, if any.
pub(crate) fn common_start(values: &[f64], width: usize) -> Option<f64> {
    let x0 = *values.first()?;
    values.chunks(width).all(|p| p[0] == x0).then_some(x0)
}

/// Standard Brownian increments on `grid`, starting at `w0`.
pub fn fill_brownian<R: Rng>(grid: &TimeGrid, w0: f64, rng: &mut R, out: &mut [f64]) {
    out[0] = w0;
    for (k, sq) in grid.sqrt_steps().iter().enumerate() {
        let z: f64 = rng.sample(StandardNormal);
        out[k + 1] = out[k] + sq * z;
    }
}

/// Brownian paths started at 0 on a uniform grid.
pub fn gen_brownian(n_paths: usize, dt: f64, horizon: f64, seed: u64) -> Result<PathBundle, SimError> {
    let grid = TimeGrid::uniform(dt, horizon)?;
    brownian_on(grid, n_paths, seed)
}

/// Brownian paths started at 0 on an arbitrary grid.
pub fn brownian_on(grid: TimeGrid, n_paths: usize, seed: u64) -> Result<PathBundle, SimError> {
    let g = grid.clone();
    PathBundle::generate(grid, n_paths, seed, 0.0, move |i, row| {
        fill_brownian(&g, 0.0, &mut path_rng(seed, i), row)
    })
}

/// Bessel(3) paths on a uniform grid.
pub fn gen_bes3(n_paths: usize, dt: f64, horizon: f64, z0: f64, seed: u64) -> Result<PathBundle, SimError> {
    let grid = TimeGrid::uniform(dt, horizon)?;
    ScaleModel::bes3().bundle(grid, n_paths, z0, seed)
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
enum Scheme {
    /// Drift `(dim - 1) / (2 z)` handled implicitly.
    Bessel { dim: f64 },
    Euler,
}

/// One-dimensional diffusion `dZ = b(Z) dt + s(Z) dW` together with a scale
/// function.
#[derive(Clone)]
pub struct ScaleModel {
    name: String,
    drift: RealFn,
    vol: RealFn,
    scale: RealFn,
    scale_derivative: RealFn,
    vanishing_at_infinity: bool,
    scheme: Scheme,
    vol_factor: f64,
}

impl fmt::Debug for ScaleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScaleModel")
            .field("name", &self.name)
            .field("vanishing_at_infinity", &self.vanishing_at_infinity)
            .field("scheme", &self.scheme)
            .field("vol_factor", &self.vol_factor)
            .finish()
    }
}

impl ScaleModel {
    /// Three-dimensional Bessel process, scale `e(x) = -1/x`.
    pub fn bes3() -> Self {
        Self::bessel(3.0).expect("dimension 3 is valid")
    }

    /// Bessel process of dimension `dim > 2`, scale `e(x) = -x^(2 - dim)`.
    pub fn bessel(dim: f64) -> Result<Self, SimError> {
        require(dim > 2.0 && dim.is_finite(), "dimension", || {
            format!("transient Bessel needs dimension > 2, got {dim}")
        })?;
        let p = 2.0 - dim;
        Ok(Self {
            name: if dim == 3.0 { "bes3".into() } else { format!("bessel({dim})") },
            drift: Arc::new(move |z| (dim - 1.0) / (2.0 * z)),
            vol: Arc::new(|_| 1.0),
            scale: Arc::new(move |z| -z.powf(p)),
            scale_derivative: Arc::new(move |z| -p * z.powf(p - 1.0)),
            vanishing_at_infinity: true,
            scheme: Scheme::Bessel { dim },
            vol_factor: 1.0,
        })
    }

    /// A user diffusion stepped by explicit Euler. `scale` must be strictly
    /// increasing with derivative `scale_derivative`.
    pub fn custom<B, S, E, D>(name: &str, drift: B, vol: S, scale: E, scale_derivative: D, vanishing_at_infinity: bool) -> Self
    where
        B: Fn(f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64) -> f64 + Send + Sync + 'static,
        E: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            drift: Arc::new(drift),
            vol: Arc::new(vol),
            scale: Arc::new(scale),
            scale_derivative: Arc::new(scale_derivative),
            vanishing_at_infinity,
            scheme: Scheme::Euler,
            vol_factor: 1.0,
        }
    }

    /// Same model with the noise multiplied by `factor`. `0` gives the
    /// deterministic drift ODE.
    pub fn with_vol_factor(mut self, factor: f64) -> Self {
        self.vol_factor = factor;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn drift(&self, z: f64) -> f64 {
        (self.drift)(z)
    }

    pub fn vol(&self, z: f64) -> f64 {
        self.vol_factor * (self.vol)(z)
    }

    pub fn scale(&self, z: f64) -> f64 {
        (self.scale)(z)
    }

    pub fn scale_derivative(&self, z: f64) -> f64 {
        (self.scale_derivative)(z)
    }

    /// True when `e < 0` and `e(inf) = 0`, the class the future-infimum
    /// formulas need.
    pub fn vanishing_at_infinity(&self) -> bool {
        self.vanishing_at_infinity
    }

    pub fn bessel_dimension(&self) -> Option<f64> {
        match self.scheme {
            Scheme::Bessel { dim } => Some(dim),
            Scheme::Euler => None,
        }
    }

    /// Rate of `d<e(Z)>_t / dt` at state `z`.
    pub fn scale_bracket_rate(&self, z: f64) -> f64 {
        let g = self.scale_derivative(z) * self.vol(z);
        g * g
    }

    /// `P_x[hit b before a]` for `a < x < b`.
    pub fn hit_probability(&self, x: f64, a: f64, b: f64) -> f64 {
        let (ea, eb, ex) = (self.scale(a), self.scale(b), self.scale(x));
        (ex - ea) / (eb - ea)
    }

    /// `P_x[ever hit a]` for `a < x`, valid when `e(inf) = 0`.
    pub fn ever_hit_probability(&self, x: f64, a: f64) -> f64 {
        if x <= a {
            1.0
        } else {
            self.scale(x) / self.scale(a)
        }
    }

    /// Advance one step of length `dt` given the Brownian increment `dw`.
    pub fn step(&self, z: f64, dt: f64, dw: f64) -> f64 {
        match self.scheme {
            Scheme::Bessel { dim } => {
                let c = z + self.vol_factor * dw;
                0.5 * (c + (c * c + 2.0 * (dim - 1.0) * dt).sqrt())
            }
            Scheme::Euler => z + self.drift(z) * dt + self.vol(z) * dw,
        }
    }

    /// Write one path started at `z0` into `out`.
    pub fn fill<R: Rng>(&self, grid: &TimeGrid, z0: f64, rng: &mut R, out: &mut [f64]) {
        out[0] = z0;
        for (k, (&dt, &sq)) in grid.steps().iter().zip(grid.sqrt_steps()).enumerate() {
            let n: f64 = rng.sample(StandardNormal);
            out[k + 1] = self.step(out[k], dt, sq * n);
        }
    }

    /// Paths started at `z0 > 0` on `grid`.
    pub fn bundle(&self, grid: TimeGrid, n_paths: usize, z0: f64, seed: u64) -> Result<PathBundle, SimError> {
        require(z0 > 0.0 && z0.is_finite(), "z0", || format!("must be positive, got {z0}"))?;
        let g = grid.clone();
        PathBundle::generate(grid, n_paths, seed, z0, move |i, row| {
            self.fill(&g, z0, &mut path_rng(seed, i), row)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_brownian_has_horizon_variance() {
        let n = 40_000;
        let pb = gen_brownian(n, 2.0, 2.0, 11).unwrap();
        assert_eq!(pb.grid().len(), 2);
        let ends = pb.column(1);
        let var = ends.iter().map(|x| x * x).sum::<f64>() / n as f64;
        // sd of the sample second moment is sqrt(2) * 2 / sqrt(n)
        assert!((var - 2.0).abs() < 3.0 * 2.0 * 2f64.sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn brownian_endpoint_clt_bounds() {
        let n = 100_000;
        let pb = gen_brownian(n, 1.0 / 64.0, 1.0, 5).unwrap();
        let w1 = pb.column(64);
        let mean = w1.iter().sum::<f64>() / n as f64;
        let var = w1.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!(mean.abs() < 3.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 3.0 * (2.0 / (n as f64 - 1.0)).sqrt());
    }

    #[test]
    fn bundles_are_seed_deterministic() {
        let a = gen_bes3(50, 1.0 / 128.0, 1.0, 1.0, 99).unwrap();
        let b = gen_bes3(50, 1.0 / 128.0, 1.0, 1.0, 99).unwrap();
        let c = gen_bes3(50, 1.0 / 128.0, 1.0, 1.0, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), c.values());
        let grid = a.grid().clone();
        let mut row = vec![0.0; grid.len()];
        ScaleModel::bes3().fill(&grid, 1.0, &mut path_rng(99, 17), &mut row);
        assert_eq!(row.as_slice(), a.path(17));
    }

    #[test]
    fn bes3_stays_positive() {
        let pb = gen_bes3(2000, 1.0 / 512.0, 1.0, 0.05, 3).unwrap();
        assert!(pb.values().iter().all(|&z| z > 0.0));
    }

    #[test]
    fn noiseless_bes3_follows_ode() {
        let grid = TimeGrid::uniform(1.0 / 4096.0, 2.0).unwrap();
        let model = ScaleModel::bes3().with_vol_factor(0.0);
        let pb = model.bundle(grid.clone(), 1, 0.7, 1).unwrap();
        for (k, &t) in grid.times().iter().enumerate() {
            let exact = (0.49 + 2.0 * t).sqrt();
            assert!((pb.path(0)[k] - exact).abs() < 2e-3, "t = {t}");
        }
    }

    #[test]
    fn one_over_bes3_mean_decreases() {
        let pb = gen_bes3(20_000, 1.0 / 256.0, 1.0, 1.0, 8).unwrap();
        let means: Vec<f64> = [0, 64, 128, 192, 256]
            .iter()
            .map(|&k| pb.column(k).iter().map(|z| 1.0 / z).sum::<f64>() / 20_000.0)
            .collect();
        assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
    }

    #[test]
    fn bes3_hit_probability_matches_scale() {
        let model = ScaleModel::bes3();
        let (a, x, b) = (0.5, 1.0, 2.0);
        let expected = model.hit_probability(x, a, b);
        assert!((expected - 2.0 / 3.0).abs() < 1e-12);
        let grid = TimeGrid::uniform(1.0 / 1024.0, 1.0).unwrap();
        let n = 4000u64;
        let mut hits_b = 0usize;
        let mut decided = 0usize;
        let mut z = vec![0.0; grid.len()];
        for i in 0..n {
            let mut rng = path_rng(21, i);
            let mut cur = x;
            // restart the grid until the path leaves (a, b)
            'path: loop {
                model.fill(&grid, cur, &mut rng, &mut z);
                for &v in &z[1..] {
                    if v >= b {
                        hits_b += 1;
                        decided += 1;
                        break 'path;
                    }
                    if v <= a {
                        decided += 1;
                        break 'path;
                    }
                }
                cur = *z.last().unwrap();
            }
        }
        let p = hits_b as f64 / decided as f64;
        let se = (expected * (1.0 - expected) / decided as f64).sqrt();
        // discrete monitoring overshoots both barriers; allow a small bias on top of 3 SE
        assert!((p - expected).abs() < 3.0 * se + 0.02, "p = {p}, expected = {expected}");
    }

    #[test]
    fn custom_model_uses_euler() {
        let m = ScaleModel::custom("bm", |_| 0.0, |_| 1.0, |x| x, |_| 1.0, false);
        assert_eq!(m.step(1.0, 0.1, 0.2), 1.2);
        assert!((m.hit_probability(0.5, 0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!(m.bessel_dimension().is_none());
    }
}
