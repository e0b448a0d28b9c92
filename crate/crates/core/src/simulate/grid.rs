//! Time grids: uniform, or uniform on a test window followed by a tail
//! whose step grows in proportion to time.

use super::{require, SimError};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    steps: Vec<f64>,
    sqrt_steps: Vec<f64>,
}

impl TimeGrid {
    /// `0, dt, 2 dt, ..., horizon`. `horizon` must be a whole number of
    /// steps.
    pub fn uniform(dt: f64, horizon: f64) -> Result<Self, SimError> {
        require(dt > 0.0 && dt.is_finite(), "dt", || format!("must be positive, got {dt}"))?;
        require(horizon >= dt, "horizon", || format!("must be at least dt, got {horizon}"))?;
        let n = (horizon / dt).round();
        require((n * dt - horizon).abs() <= 1e-9 * horizon, "horizon", || {
            format!("{horizon} is not a multiple of dt = {dt}")
        })?;
        let n = n as usize;
        Ok(Self::from_times((0..=n).map(|k| k as f64 * dt).collect()))
    }

    /// Uniform step `dt` on `[0, fine_until]`, then step `dt * t / fine_until`
    /// (capped at `max_dt`) up to `horizon`. The relative resolution of the
    /// tail stays constant on the diffusive scale `sqrt(t)`.
    pub fn refined_tail(dt: f64, fine_until: f64, horizon: f64, max_dt: f64) -> Result<Self, SimError> {
        let mut times = Self::uniform(dt, fine_until)?.times;
        require(horizon >= fine_until, "tail_horizon", || {
            format!("{horizon} is before the end of the fine window {fine_until}")
        })?;
        require(max_dt >= dt, "max_dt", || format!("{max_dt} is below dt = {dt}"))?;
        let mut t = fine_until;
        while t < horizon {
            let step = (dt * t / fine_until).min(max_dt);
            t = if t + step * 1.5 >= horizon { horizon } else { t + step };
            times.push(t);
        }
        Ok(Self::from_times(times))
    }

    /// Grid from explicit strictly increasing points starting at 0.
    pub fn from_points(times: Vec<f64>) -> Result<Self, SimError> {
        require(times.len() >= 2, "times", || "a grid needs at least two points".into())?;
        require(times[0] == 0.0, "times", || format!("grid must start at 0, got {}", times[0]))?;
        require(times.windows(2).all(|w| w[1] > w[0]), "times", || "points must increase strictly".into())?;
        Ok(Self::from_times(times))
    }

    fn from_times(times: Vec<f64>) -> Self {
        let steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let sqrt_steps = steps.iter().map(|s| s.sqrt()).collect();
        Self { times, steps, sqrt_steps }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn sqrt_steps(&self) -> &[f64] {
        &self.sqrt_steps
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("grids are never empty")
    }

    /// Index of the grid point equal to `t` (up to rounding).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let i = self.times.partition_point(|&s| s < t - 1e-12);
        (i < self.times.len() && (self.times[i] - t).abs() <= 1e-9).then_some(i)
    }

    /// Index of the last grid point `<= t`.
    pub fn floor_index(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t + 1e-12).saturating_sub(1)
    }
}
