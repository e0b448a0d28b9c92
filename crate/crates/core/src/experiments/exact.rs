//! Exact checks on randomly generated finite filtered spaces.

use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Check, CriterionOutcome};
use crate::finite_prob::drift::{drift_operator, max_martingale_residual, representation_process, with_connector_drift};
use crate::finite_prob::planted::{cox_time, independent_coin, plant_viable, PlantConfig, PlantedModel};
use crate::finite_prob::solve::{deflated, deflated_defect, solve_accessible};
use crate::finite_prob::structure::{check_positivity, fit_phi_n, kernel_identity_defect, multiplier_drift};
use crate::finite_prob::{EnlargedPair, FiniteError, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactSuiteParams {
    pub n_models: usize,
    pub seed: u64,
    pub float_tolerance: f64,
}

impl Default for ExactSuiteParams {
    fn default() -> Self {
        Self { n_models: 200, seed: 20_240_601, float_tolerance: 1e-10 }
    }
}

#[derive(Debug, Default, Clone, Serialize)]
struct Tally {
    fit_not_equivalent: usize,
    kernel_defects: usize,
    positivity_failures: usize,
    jump_at_least_one: usize,
    rational_defects: usize,
    float_over_tolerance: usize,
    errors: Vec<String>,
    max_float_residual: f64,
    max_leaves: usize,
    max_epochs: usize,
    max_branching: usize,
}

fn rational_checks(m: &PlantedModel, t: &mut Tally) -> Result<(), FiniteError> {
    let pair = &m.pair;
    let w = representation_process(pair.base());
    let gammas = w.iter().map(|x| drift_operator(pair, x)).collect::<Result<Vec<_>, _>>()?;
    let sd = fit_phi_n(pair, &w, &gammas, m.n.clone())?;
    if w.iter().zip(&gammas).any(|(x, g)| &multiplier_drift(pair, &sd, x) != g) {
        t.fit_not_equivalent += 1;
    }
    if kernel_identity_defect(&sd).is_some() {
        t.kernel_defects += 1;
    }
    if !check_positivity(&sd).pass {
        t.positivity_failures += 1;
    }
    for connector in [None, Some(&m.connector)] {
        let sol = solve_accessible(pair, &sd, connector)?;
        if sol.jumps.iter().flatten().flatten().any(|y| *y >= Rational::one()) {
            t.jump_at_least_one += 1;
        }
        for x in &w {
            let special = connector.map_or_else(|| x.clone(), |d| with_connector_drift(pair.base(), x, d));
            if deflated_defect(pair, &sol.deflator, &special)?.is_some() {
                t.rational_defects += 1;
            }
        }
    }
    Ok(())
}

fn float_checks(m: &PlantedModel, tol: f64, t: &mut Tally) -> Result<(), FiniteError> {
    let pair = m.pair.map_scalar(|v| v.to_f64())?;
    let n: Vec<_> = m.n.iter().map(|p| p.map(|v| v.to_f64())).collect();
    let d = m.connector.map(|v| v.to_f64());
    let w = representation_process(pair.base());
    let gammas = w.iter().map(|x| drift_operator(&pair, x)).collect::<Result<Vec<_>, _>>()?;
    let sd = fit_phi_n(&pair, &w, &gammas, n)?;
    let fine = pair.fine_space();
    let mut worst = 0.0f64;
    for connector in [None, Some(&d)] {
        let sol = solve_accessible(&pair, &sd, connector)?;
        for x in &w {
            let special = connector.map_or_else(|| x.clone(), |d| with_connector_drift(pair.base(), x, d));
            worst = worst.max(max_martingale_residual(&fine, &deflated(&pair, &sol.deflator, &special)?));
        }
    }
    if worst > tol {
        t.float_over_tolerance += 1;
    }
    t.max_float_residual = t.max_float_residual.max(worst);
    Ok(())
}

/// Planted models: the fitted multiplier reproduces the drift, the deflated
/// basis martingales are exact martingales of the enlarged filtration, and
/// every jump of the structure connector stays below one.
pub fn run_exact_suite(p: &ExactSuiteParams) -> CriterionOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut t = Tally::default();
    for i in 0..p.n_models {
        let m = plant_viable(&mut rng, &PlantConfig::default());
        let fine = m.pair.fine();
        t.max_leaves = t.max_leaves.max(fine.n_atoms());
        t.max_epochs = t.max_epochs.max(fine.horizon());
        t.max_branching = t.max_branching.max(m.pair.base_filtration().max_branching());
        if let Err(e) = rational_checks(&m, &mut t) {
            t.errors.push(format!("model {i}, rational: {e}"));
        }
        if let Err(e) = float_checks(&m, p.float_tolerance, &mut t) {
            t.errors.push(format!("model {i}, float: {e}"));
        }
    }
    let n = p.n_models;
    let count = |bad: usize, what: &str| format!("{bad} of {n} models {what}");
    let checks = vec![
        Check::new("model errors", t.errors.is_empty(), format!("{} errors", t.errors.len())),
        Check::new("fitted multiplier reproduces the drift", t.fit_not_equivalent == 0, count(t.fit_not_equivalent, "differ")),
        Check::new("jump kernels are probabilities", t.kernel_defects == 0, count(t.kernel_defects, "defective")),
        Check::new("positivity", t.positivity_failures == 0, count(t.positivity_failures, "fail")),
        Check::new("structure connector jumps below one", t.jump_at_least_one == 0, count(t.jump_at_least_one, "have a jump >= 1")),
        Check::new(
            "deflated basis martingales, rational",
            t.rational_defects == 0,
            format!("{} nonzero residuals", t.rational_defects),
        ),
        Check::new(
            "deflated basis martingales, float",
            t.float_over_tolerance == 0,
            format!("max residual {:.3e} (tolerance {:.0e})", t.max_float_residual, p.float_tolerance),
        ),
    ];
    CriterionOutcome::new(1, "exact finite suite", checks, json!({ "params": p, "tally": t }))
}

/// Largest absolute drift value over the basis martingales; zero means
/// the enlargement keeps every base martingale a martingale.
pub fn max_drift<S: Scalar>(pair: &EnlargedPair<S>) -> Result<f64, FiniteError> {
    let mut worst = 0.0f64;
    for x in representation_process(pair.base()) {
        let g = drift_operator(pair, &x)?;
        worst = g.blocks().iter().flatten().map(|v| v.to_f64().abs()).fold(worst, f64::max);
    }
    Ok(worst)
}

/// Drift of independent-coin and Cox-time enlargements on `n_models`
/// random trees each; every value must be exactly zero.
pub fn hypothesis_h_finite(n_models: usize, seed: u64) -> (Check, serde_json::Value) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nonzero = 0;
    let mut errors = Vec::new();
    for i in 0..n_models {
        for (kind, pair) in [("coin", independent_coin(&mut rng, &PlantConfig::default())), ("cox", cox_time(&mut rng, &PlantConfig::default()))] {
            let exact_zero = representation_process(pair.base())
                .iter()
                .map(|x| drift_operator(&pair, x))
                .collect::<Result<Vec<_>, _>>()
                .map(|gs| gs.iter().all(|g| g.blocks().iter().flatten().all(|v| v.is_zero())));
            match exact_zero {
                Ok(true) => {}
                Ok(false) => nonzero += 1,
                Err(e) => errors.push(format!("{kind} model {i}: {e}")),
            }
        }
    }
    let check = Check::new(
        "finite drift vanishes",
        nonzero == 0 && errors.is_empty(),
        format!("{} coin and {} Cox models, {nonzero} with nonzero drift, {} errors", n_models, n_models, errors.len()),
    );
    (check, json!({ "n_models": n_models, "nonzero": nonzero, "errors": errors }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_exact_suite_passes() {
        let out = run_exact_suite(&ExactSuiteParams { n_models: 8, ..Default::default() });
        assert!(out.pass, "{}", out.render());
        let (c, _) = hypothesis_h_finite(4, 1);
        assert!(c.verdict.is_pass(), "{}", c.summary);
    }
}
