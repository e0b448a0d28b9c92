//! Text format for finite models and the JSON report produced from them.
//!
//! ```toml
//! format = "finite-model/1"
//! probabilities = ["1/26", "7/26", "55/468", "125/468", "11/117", "25/117"]
//! base = [[0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0], [0, 0, 1, 1, 2, 2]]  # block label per atom, per epoch
//! fine = [[0, 0, 0, 0, 0, 0], [0, 1, 0, 1, 0, 1], [0, 1, 2, 3, 4, 5]]  # optional; defaults to base
//! connector = "D"           # optional base connector
//! multiplier_basis = ["N"]  # optional; defaults to the representation process
//!
//! [processes]
//! D = [["0", "0", "0", "0", "0", "0"], ["0", "0", "0", "0", "0", "0"], ["-1/2", "-1/2", "4/31", "4/31", "21/62", "21/62"]]
//! N = [["0", "0", "0", "0", "0", "0"], ["0", "0", "0", "0", "0", "0"], ["27/13", "27/13", "-12/13", "-12/13", "-12/13", "-12/13"]]
//! ```
//!
//! Process values are listed per atom at every epoch and must be constant
//! on blocks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::drift::{
    drift_operator, martingale_defect, representation_process, with_connector_drift,
};
use super::scalar::{Rational, Scalar};
use super::solve::{deflated_defect, solve_accessible};
use super::space::{AdaptedProcess, EnlargedPair, FiniteFilteredSpace, Filtration, Partition};
use super::structure::{
    check_positivity, fit_phi_n, kernel_identity_defect, multiplier_drift, viability_condition,
    PositivityReport, ViabilityReport,
};
use super::FiniteError;

pub const MODEL_FORMAT: &str = "finite-model/1";
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    probabilities: Vec<String>,
    base: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fine: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    connector: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    multiplier_basis: Option<Vec<String>>,
    #[serde(default)]
    processes: BTreeMap<String, Vec<Vec<String>>>,
}

/// A parsed model: an enlargement with named base processes.
#[derive(Debug, Clone)]
pub struct FiniteModel {
    pub pair: EnlargedPair<Rational>,
    pub processes: BTreeMap<String, AdaptedProcess<Rational>>,
    pub connector: Option<String>,
    pub multiplier_basis: Option<Vec<String>>,
}

fn parse_value(text: &str) -> Result<Rational, FiniteError> {
    Rational::parse_literal(text).ok_or_else(|| FiniteError::Parse(format!("not a rational: {text:?}")))
}

fn partitions(labels: &[Vec<usize>], n_atoms: usize) -> Result<Vec<Partition>, FiniteError> {
    labels
        .iter()
        .enumerate()
        .map(|(k, row)| {
            if row.len() != n_atoms {
                return Err(FiniteError::Parse(format!(
                    "epoch {k}: {} labels for {n_atoms} atoms",
                    row.len()
                )));
            }
            Ok(Partition::from_labels(row))
        })
        .collect()
}

impl FiniteModel {
    pub fn from_toml_str(text: &str) -> Result<Self, FiniteError> {
        let doc: ModelDoc = toml::from_str(text).map_err(|e| FiniteError::Parse(e.to_string()))?;
        if doc.format != MODEL_FORMAT {
            return Err(FiniteError::Parse(format!(
                "unsupported format {:?}, expected {MODEL_FORMAT:?}",
                doc.format
            )));
        }
        let probs = doc.probabilities.iter().map(|p| parse_value(p)).collect::<Result<Vec<_>, _>>()?;
        let n_atoms = probs.len();
        let base = Filtration::new(partitions(&doc.base, n_atoms)?)?;
        let fine = match &doc.fine {
            Some(labels) => Filtration::new(partitions(labels, n_atoms)?)?,
            None => base.clone(),
        };
        let space = FiniteFilteredSpace::new(probs, base)?;
        let pair = EnlargedPair::new(space, fine)?;
        let mut processes = BTreeMap::new();
        for (name, rows) in &doc.processes {
            let values = rows
                .iter()
                .map(|row| row.iter().map(|v| parse_value(v)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            if values.iter().any(|row| row.len() != n_atoms) {
                return Err(FiniteError::Parse(format!("process {name}: one value per atom expected")));
            }
            let p = AdaptedProcess::from_atoms(pair.base_filtration(), &values)
                .map_err(|e| FiniteError::Parse(format!("process {name}: {e}")))?;
            processes.insert(name.clone(), p);
        }
        for name in doc.connector.iter().chain(doc.multiplier_basis.iter().flatten()) {
            if !processes.contains_key(name) {
                return Err(FiniteError::Parse(format!("unknown process {name:?}")));
            }
        }
        Ok(Self { pair, processes, connector: doc.connector, multiplier_basis: doc.multiplier_basis })
    }

    pub fn to_toml_string(&self) -> String {
        let base = self.pair.base_filtration();
        let labels = |f: &Filtration| f.partitions().iter().map(|p| p.labels().to_vec()).collect();
        let doc = ModelDoc {
            format: MODEL_FORMAT.into(),
            probabilities: self.pair.base().probs().iter().map(Scalar::render).collect(),
            base: labels(base),
            fine: Some(labels(self.pair.fine())),
            connector: self.connector.clone(),
            multiplier_basis: self.multiplier_basis.clone(),
            processes: self
                .processes
                .iter()
                .map(|(name, p)| {
                    let rows = (0..=base.horizon())
                        .map(|k| p.atom_values(base, k).iter().map(Scalar::render).collect())
                        .collect();
                    (name.clone(), rows)
                })
                .collect(),
        };
        toml::to_string(&doc).expect("model documents always serialise")
    }

    /// Runs the full exact analysis on this model with scalar type `S`.
    pub fn analyze<S: Scalar>(&self, convert: impl Fn(&Rational) -> S + Copy) -> Result<FiniteReport, FiniteError> {
        let pair = self.pair.map_scalar(convert)?;
        let pick = |name: &String| self.processes[name].map(convert);
        let n = self.multiplier_basis.as_ref().map(|names| names.iter().map(pick).collect());
        let connector = self.connector.as_ref().map(pick);
        analyze(&pair, n, connector.as_ref())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleCheck {
    pub name: String,
    pub exact_martingale: bool,
    pub epoch: Option<usize>,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplierSummary {
    pub dim: usize,
    /// `phi[k][g]` rendered exactly.
    pub phi: Vec<Vec<Vec<String>>>,
    /// Number of unresolved directions per epoch, summed over fine blocks.
    pub null_directions: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionSummary {
    pub max_connector_jump: String,
    pub min_deflator: String,
    pub k: Vec<Vec<Vec<String>>>,
}

/// Report for one finite model.
#[derive(Debug, Clone, Serialize)]
pub struct FiniteReport {
    pub schema_version: u32,
    pub exact: bool,
    pub n_atoms: usize,
    pub horizon: usize,
    pub multiplier: Option<MultiplierSummary>,
    pub multiplier_error: Option<String>,
    pub drift_images_match: bool,
    pub kernel_identity_holds: bool,
    pub positivity: Option<PositivityReport>,
    pub viability: Option<ViabilityReport>,
    pub solution: Option<SolutionSummary>,
    pub solve_error: Option<String>,
    pub deflated_martingales: Vec<MartingaleCheck>,
    pub pass: bool,
}

fn max_of<S: Scalar>(values: impl Iterator<Item = S>, min: bool) -> Option<S> {
    values.fold(None, |acc, v| match acc {
        None => Some(v),
        Some(a) => Some(if (v < a) == min { v } else { a }),
    })
}

/// Fits the multiplier, checks positivity and viability, solves for the
/// connector and verifies that the deflated basis martingales are
/// martingales of the enlarged filtration.
pub fn analyze<S: Scalar>(
    pair: &EnlargedPair<S>,
    n: Option<Vec<AdaptedProcess<S>>>,
    connector: Option<&AdaptedProcess<S>>,
) -> Result<FiniteReport, FiniteError> {
    let w = representation_process(pair.base());
    let gammas = w.iter().map(|x| drift_operator(pair, x)).collect::<Result<Vec<_>, _>>()?;
    let n = n.unwrap_or_else(|| w.clone());
    let mut report = FiniteReport {
        schema_version: REPORT_SCHEMA_VERSION,
        exact: S::EXACT,
        n_atoms: pair.base().n_atoms(),
        horizon: pair.base().horizon(),
        multiplier: None,
        multiplier_error: None,
        drift_images_match: false,
        kernel_identity_holds: false,
        positivity: None,
        viability: None,
        solution: None,
        solve_error: None,
        deflated_martingales: Vec::new(),
        pass: false,
    };
    let sd = match fit_phi_n(pair, &w, &gammas, n) {
        Ok(sd) => sd,
        Err(e) => {
            report.multiplier_error = Some(e.to_string());
            return Ok(report);
        }
    };
    report.multiplier = Some(MultiplierSummary {
        dim: sd.dim,
        phi: sd.phi.iter().map(|row| row.iter().map(|v| v.iter().map(Scalar::render).collect()).collect()).collect(),
        null_directions: sd.null_directions.iter().map(|row| row.iter().map(Vec::len).sum()).collect(),
    });
    report.drift_images_match = w.iter().zip(&gammas).all(|(x, g)| {
        let m = multiplier_drift(pair, &sd, x);
        m.blocks().iter().flatten().zip(g.blocks().iter().flatten()).all(|(a, b)| a.approx_eq(b))
    });
    report.kernel_identity_holds = kernel_identity_defect(&sd).is_none();
    let positivity = check_positivity(&sd);
    let viability = viability_condition(pair, &sd, connector);
    let viable = positivity.pass && viability.pass;
    report.positivity = Some(positivity);
    report.viability = Some(viability);

    match solve_accessible(pair, &sd, connector) {
        Ok(sol) => {
            let jumps = sol.jumps.iter().flatten().flatten().cloned();
            let max_jump = max_of(jumps, false).unwrap_or_else(S::zero);
            let min_defl = max_of(sol.deflator.blocks().iter().flatten().cloned(), true).unwrap_or_else(S::one);
            report.solution = Some(SolutionSummary {
                max_connector_jump: max_jump.render(),
                min_deflator: min_defl.render(),
                k: sol.k.iter().map(|row| row.iter().map(|v| v.iter().map(Scalar::render).collect()).collect()).collect(),
            });
            for (i, x) in w.iter().enumerate() {
                let special = match connector {
                    Some(d) => with_connector_drift(pair.base(), x, d),
                    None => x.clone(),
                };
                let defect = deflated_defect(pair, &sol.deflator, &special)?;
                report.deflated_martingales.push(MartingaleCheck {
                    name: format!("W{i}"),
                    exact_martingale: defect.is_none(),
                    epoch: defect.as_ref().map(|d| d.epoch),
                    residual: defect.map(|d| d.residual),
                });
            }
            if let Some(d) = connector {
                if let Some(defect) = martingale_defect(pair.base(), d) {
                    report.solve_error = Some(format!("connector is not a martingale at epoch {}", defect.epoch));
                }
            }
        }
        Err(e) => report.solve_error = Some(e.to_string()),
    }
    report.pass = viable
        && report.drift_images_match
        && report.kernel_identity_holds
        && report.solution.is_some()
        && report.solve_error.is_none()
        && report.deflated_martingales.iter().all(|c| c.exact_martingale);
    Ok(report)
}
