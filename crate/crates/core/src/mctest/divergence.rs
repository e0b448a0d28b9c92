//! Profiles of `int_{1/2}^{1-eps}` integrals near the terminal time.
//!
//! The process `r -> W_1 - W_{1-r}` is a Brownian motion in `r`, so it is
//! simulated exactly on a grid that is uniform in `u = -ln r`, fine near
//! `s = 1`. Integrals are taken by the trapezoid rule in `u`, where
//! `ds = r du`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_2_PI, LN_2};

use super::quadrature::{tanh_sinh, trapezoid};
use super::{mean_se, Verdict};
use crate::formulas::bridge::{fa1_companion_mean, fa1_h_squared_integral};
use crate::simulate::rng::path_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    /// `|H_s| |W_1 - W_s| / (1 - s)`.
    Fa1Companion,
    /// Same with `H` replaced by 1; the integral converges.
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceSpec {
    pub alpha: f64,
    /// Cut-offs, decreasing.
    pub eps: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    /// Step in `u = -ln(1 - s)`.
    pub du: f64,
    pub integrand: Integrand,
    pub rel_tol: f64,
}

impl DivergenceSpec {
    pub fn new(alpha: f64, eps: Vec<f64>, n_paths: usize, seed: u64) -> Self {
        Self { alpha, eps, n_paths, seed, du: 0.01, integrand: Integrand::Fa1Companion, rel_tol: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub eps: f64,
    pub mean: f64,
    pub median: f64,
    pub se: f64,
    pub closed_form: f64,
    pub relative_error: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareRow {
    pub eps: f64,
    pub quadrature: f64,
    pub closed_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceProfile {
    pub spec: DivergenceSpec,
    pub rows: Vec<ProfileRow>,
    pub monotone: bool,
    /// Limit of the expected profile, when finite.
    pub limit: Option<f64>,
    /// Partial `int H^2` by the same trapezoid grid.
    pub h_squared: Vec<SquareRow>,
    /// Full `int H^2` by an improper quadrature, and its closed form.
    pub h_squared_total: f64,
    pub h_squared_total_closed: f64,
    pub h_squared_relative_error: f64,
    pub warnings: Vec<String>,
    pub verdict: Verdict,
    pub pass: bool,
}

/// Companion integrand times `ds/du = r`, i.e. `r^(-1/2) u^(-alpha) |v|`.
/// Written in `u` so the closed end `s = 1/2` keeps its value.
fn companion_in_u(u: f64, r: f64, v: f64, alpha: f64) -> f64 {
    v.abs() / r.sqrt() * u.powf(-alpha)
}

/// Grid in `u` from `ln 2` through every `-ln eps`, steps at most `du`.
fn u_grid(eps: &[f64], du: f64) -> (Vec<f64>, Vec<usize>) {
    let mut us = vec![LN_2];
    let mut marks = Vec::new();
    for &e in eps {
        let target = -e.ln();
        let start = *us.last().expect("non-empty");
        let n = ((target - start) / du).ceil().max(1.0) as usize;
        us.extend((1..=n).map(|k| start + (target - start) * k as f64 / n as f64));
        marks.push(us.len() - 1);
    }
    (us, marks)
}

fn expected_profile(spec: &DivergenceSpec, eps: f64) -> f64 {
    match spec.integrand {
        Integrand::Fa1Companion => fa1_companion_mean(spec.alpha, eps),
        Integrand::Bounded => FRAC_2_PI.sqrt() * 2.0 * (0.5f64.sqrt() - eps.sqrt()),
    }
}

/// Simulate the profile and compare it with its closed form.
pub fn divergence_profile(spec: &DivergenceSpec) -> DivergenceProfile {
    let mut warnings = Vec::new();
    let mut eps: Vec<f64> = spec.eps.iter().copied().filter(|&e| e > 0.0 && e < 0.5).collect();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    // Resolution floor: keep at least a few grid points per e-fold.
    let floor = 1e-12;
    if eps.iter().any(|&e| e < floor) {
        warnings.push(format!("cut-offs below {floor:e} clipped"));
        eps.iter_mut().for_each(|e| *e = e.max(floor));
        eps.dedup();
    }
    if eps.len() != spec.eps.len() {
        warnings.push("cut-offs outside (0, 1/2) or repeated were dropped".into());
    }
    let (us, marks) = u_grid(&eps, spec.du);
    let rs: Vec<f64> = us.iter().map(|u| (-u).exp()).collect();

    let per_path: Vec<Vec<f64>> = (0..spec.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(spec.seed, i);
            // Brownian motion in r, generated from the smallest r upwards.
            let mut v = vec![0.0; rs.len()];
            let last = rs.len() - 1;
            v[last] = rs[last].sqrt() * rng.sample::<f64, _>(StandardNormal);
            for k in (0..last).rev() {
                v[k] = v[k + 1] + (rs[k] - rs[k + 1]).sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
            let g: Vec<f64> = us
                .iter()
                .zip(&rs)
                .zip(&v)
                .map(|((&u, &r), &vk)| match spec.integrand {
                    Integrand::Fa1Companion => companion_in_u(u, r, vk, spec.alpha),
                    Integrand::Bounded => vk.abs(),
                })
                .collect();
            marks.iter().map(|&m| trapezoid(&us[..=m], &g[..=m])).collect()
        })
        .collect();

    let rows: Vec<ProfileRow> = eps
        .iter()
        .enumerate()
        .map(|(j, &e)| {
            let mut col: Vec<f64> = per_path.iter().map(|p| p[j]).collect();
            let (mean, se, _) = mean_se(col.iter().copied());
            col.sort_by(f64::total_cmp);
            let median = col.get(col.len() / 2).copied().unwrap_or(f64::NAN);
            let closed_form = expected_profile(spec, e);
            let relative_error = (mean - closed_form).abs() / closed_form.abs();
            ProfileRow { eps: e, mean, median, se, closed_form, relative_error, within_tolerance: relative_error <= spec.rel_tol }
        })
        .collect();
    let monotone = rows.windows(2).all(|w| w[1].mean > w[0].mean);

    let h2: Vec<f64> = us.iter().map(|&u| u.powf(-2.0 * spec.alpha)).collect();
    let h_squared = eps
        .iter()
        .zip(&marks)
        .map(|(&e, &m)| SquareRow { eps: e, quadrature: trapezoid(&us[..=m], &h2[..=m]), closed_form: fa1_h_squared_integral(spec.alpha, e) })
        .collect();
    let total = h_squared_improper(spec.alpha);
    let total_closed = fa1_h_squared_integral(spec.alpha, 0.0);
    let h_rel = (total - total_closed).abs() / total_closed;

    let pass = !rows.is_empty() && rows.iter().all(|r| r.within_tolerance) && monotone && h_rel <= 0.01;
    DivergenceProfile {
        limit: match spec.integrand {
            Integrand::Fa1Companion => None,
            Integrand::Bounded => Some(FRAC_2_PI.sqrt() * 2.0f64.sqrt()),
        },
        spec: spec.clone(),
        rows,
        monotone,
        h_squared,
        h_squared_total: total,
        h_squared_total_closed: total_closed,
        h_squared_relative_error: h_rel,
        warnings,
        verdict: Verdict::from_pass(pass),
        pass,
    }
}

/// `int_{1/2}^1 H_s^2 ds` by tanh-sinh after `u = -ln(1-s) = ln 2 + (1-y)/y`,
/// `y in (0, 1]`.
pub fn h_squared_improper(alpha: f64) -> f64 {
    tanh_sinh(
        |y| {
            let u = LN_2 + (1.0 - y) / y;
            (-2.0 * alpha * u.ln() - 2.0 * y.ln()).exp()
        },
        0.0,
        1.0,
        8,
    )
}
