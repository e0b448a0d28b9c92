//! Experiment configuration: one TOML document with a section per
//! experiment. Every field has a default, so an empty file is valid.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::experiments::bessel::{HonestParams, PitmanParams};
use crate::experiments::brownian::{CoxParams, EmeryParams, JacodParams, DEFAULT_DT};
use crate::experiments::calibration::CalibrationParams;
use crate::experiments::exact::ExactSuiteParams;
use crate::experiments::fa1::Fa1Params;
use crate::experiments::supremum::SupParams;
use crate::experiments::DriftQuadrature;
use crate::simulate::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    Brownian,
    Bes3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    pub process: Process,
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
    /// Starting point of the Bessel process.
    pub z0: f64,
    pub seed: u64,
    pub qv_tolerance: f64,
    /// Also write the long-format CSV next to the binary cache.
    pub csv: bool,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self { process: Process::Brownian, n_paths: 100, dt: DEFAULT_DT, horizon: 1.0, z0: 1.0, seed: 1, qv_tolerance: 0.03, csv: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Parent directory of the run directories.
    pub output: PathBuf,
    pub simulate: SimulateParams,
    pub exact: ExactSuiteParams,
    pub cox: CoxParams,
    pub jacod: JacodParams,
    pub emery: EmeryParams,
    pub pitman: PitmanParams,
    pub honest: HonestParams,
    pub sup: SupParams,
    pub fa1: Fa1Params,
    pub calibration: CalibrationParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            output: PathBuf::from("runs"),
            simulate: Default::default(),
            exact: Default::default(),
            cox: Default::default(),
            jacod: Default::default(),
            emery: Default::default(),
            pitman: Default::default(),
            honest: Default::default(),
            sup: Default::default(),
            fa1: Default::default(),
            calibration: Default::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("{0}")]
    Parse(String),
}

fn field(section: &str, name: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: format!("{section}.{name}"), message: message.into() }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configs always serialise")
    }

    /// Applies `section.field=value` overrides. Values are read as TOML
    /// literals, falling back to a bare string.
    pub fn with_overrides<'a>(self, sets: impl IntoIterator<Item = &'a str>) -> Result<Self, ConfigError> {
        let mut doc = toml::Table::try_from(&self).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for set in sets {
            let (key, raw) = set
                .split_once('=')
                .ok_or_else(|| ConfigError::Parse(format!("override {set:?} is not of the form key=value")))?;
            let value = parse_literal(raw.trim());
            let path: Vec<&str> = key.trim().split('.').collect();
            let (last, parents) = path.split_last().expect("split yields at least one piece");
            let mut table = &mut doc;
            for p in parents {
                table = table
                    .get_mut(*p)
                    .and_then(toml::Value::as_table_mut)
                    .ok_or_else(|| ConfigError::Field { field: key.into(), message: "no such section".into() })?;
            }
            if !table.contains_key(*last) {
                return Err(ConfigError::Field { field: key.into(), message: "no such field".into() });
            }
            table.insert((*last).into(), value);
        }
        toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.into()))
}

/// Field checks shared by the Monte Carlo sections.
struct Checker<'a> {
    section: &'a str,
}

impl Checker<'_> {
    fn positive(&self, name: &str, v: f64) -> Result<(), ConfigError> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(field(self.section, name, format!("must be positive, got {v}")))
        }
    }

    fn at_least(&self, name: &str, v: usize, min: usize) -> Result<(), ConfigError> {
        if v >= min {
            Ok(())
        } else {
            Err(field(self.section, name, format!("must be at least {min}, got {v}")))
        }
    }

    fn unit(&self, name: &str, v: f64) -> Result<(), ConfigError> {
        if v > 0.0 && v <= 1.0 {
            Ok(())
        } else {
            Err(field(self.section, name, format!("must lie in (0, 1], got {v}")))
        }
    }

    fn grid(&self, dt: f64, horizon: f64) -> Result<TimeGrid, ConfigError> {
        self.positive("dt", dt)?;
        TimeGrid::uniform(dt, horizon).map_err(|e| field(self.section, "dt", e.to_string()))
    }

    /// Common `n_paths`, `dt` and `macro_len` checks on `[0, 1]`.
    fn paths(&self, n_paths: usize, dt: f64, macro_len: usize) -> Result<(), ConfigError> {
        self.at_least("n_paths", n_paths, 1)?;
        let grid = self.grid(dt, 1.0)?;
        self.at_least("macro_len", macro_len, 1)?;
        if macro_len > grid.n_steps() {
            return Err(field(self.section, "macro_len", format!("exceeds the {} steps of [0, 1]", grid.n_steps())));
        }
        Ok(())
    }

    fn times(&self, name: &str, times: &[f64], dt: f64) -> Result<(), ConfigError> {
        let grid = self.grid(dt, 1.0)?;
        for &t in times {
            if grid.index_of(t).is_none() {
                return Err(field(self.section, name, format!("{t} is not a grid point of [0, 1] with dt = {dt}")));
            }
        }
        Ok(())
    }

    fn quadrature(&self, q: DriftQuadrature) -> Result<(), ConfigError> {
        match q {
            DriftQuadrature::LeftPoint => Ok(()),
            DriftQuadrature::Bisection { resolution, .. } => self.positive("quadrature.resolution", resolution),
        }
    }
}

/// Sections the subcommands read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Simulate,
    Exact,
    Cox,
    Jacod,
    Emery,
    Pitman,
    Honest,
    Sup,
    Fa1,
    Calibration,
}

impl Section {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Exact => "exact",
            Self::Cox => "cox",
            Self::Jacod => "jacod",
            Self::Emery => "emery",
            Self::Pitman => "pitman",
            Self::Honest => "honest",
            Self::Sup => "sup",
            Self::Fa1 => "fa1",
            Self::Calibration => "calibration",
        }
    }
}

impl ExperimentConfig {
    /// Checks the fields of one section against the preconditions of the
    /// code that consumes them.
    pub fn validate(&self, section: Section) -> Result<(), ConfigError> {
        let c = Checker { section: section.name() };
        match section {
            Section::Simulate => {
                let p = &self.simulate;
                c.at_least("n_paths", p.n_paths, 1)?;
                c.positive("horizon", p.horizon)?;
                c.grid(p.dt, p.horizon)?;
                c.positive("z0", p.z0)?;
                c.positive("qv_tolerance", p.qv_tolerance)
            }
            Section::Exact => {
                let p = &self.exact;
                c.at_least("n_models", p.n_models, 1)?;
                c.positive("float_tolerance", p.float_tolerance)
            }
            Section::Cox => {
                let p = &self.cox;
                c.paths(p.n_paths, p.dt, p.macro_len)?;
                c.at_least("finite_models", p.finite_models, 1)
            }
            Section::Jacod => {
                let p = &self.jacod;
                c.paths(p.n_paths, p.dt, p.macro_len)?;
                if !(p.window_end > 0.0 && p.window_end < 1.0) {
                    return Err(field(c.section, "window_end", format!("must lie in (0, 1), got {}", p.window_end)));
                }
                if p.drift_sign.abs() != 1.0 {
                    return Err(field(c.section, "drift_sign", format!("must be 1 or -1, got {}", p.drift_sign)));
                }
                Ok(())
            }
            Section::Emery => {
                let p = &self.emery;
                c.paths(p.n_paths, p.dt, p.macro_len)?;
                c.times("azema_times", &p.azema_times, p.dt)?;
                if p.azema_times.iter().any(|&t| t >= 1.0) {
                    return Err(field(c.section, "azema_times", "must lie in [0, 1)"));
                }
                c.unit("post_window_end", p.post_window_end)?;
                c.quadrature(p.quadrature)
            }
            Section::Pitman => {
                let p = &self.pitman;
                c.paths(p.n_paths, p.dt, p.macro_len)?;
                c.positive("z0", p.z0)?;
                if !(p.tail_horizon > 1.0) {
                    return Err(field(c.section, "tail_horizon", format!("must exceed 1, got {}", p.tail_horizon)));
                }
                c.positive("max_tail_dt", p.max_tail_dt)?;
                c.positive("qv_tolerance", p.qv_tolerance)?;
                c.at_least("localtime_paths", p.localtime_paths, 1)?;
                c.grid(p.localtime_dt, 1.0).map_err(|_| field(c.section, "localtime_dt", "must divide [0, 1] into whole steps"))?;
                c.positive("eps", p.eps)?;
                c.positive("localtime_tolerance", p.localtime_tolerance)?;
                c.positive("localtime_resolution", p.localtime_resolution)
            }
            Section::Honest => {
                let p = &self.honest;
                c.paths(p.n_paths, p.dt, p.macro_len)?;
                c.positive("z0", p.z0)?;
                c.positive("level", p.level)?;
                if !(p.tail_horizon > 1.0) {
                    return Err(field(c.section, "tail_horizon", format!("must exceed 1, got {}", p.tail_horizon)));
                }
                c.positive("max_tail_dt", p.max_tail_dt)?;
                c.unit("window_end", p.window_end)?;
                c.times("azema_times", &p.azema_times, p.dt)?;
                c.quadrature(p.quadrature)?;
                c.positive("localization", p.localization)?;
                c.unit("max_censored", p.max_censored)
            }
            Section::Sup => {
                let p = &self.sup;
                c.paths(p.n_paths, p.dt, p.macro_len)?;
                c.grid(p.dt, p.horizon)?;
                c.unit("window_end", p.window_end)?;
                if p.horizon <= p.window_end {
                    return Err(field(c.section, "horizon", format!("must exceed window_end = {}", p.window_end)));
                }
                c.unit("max_censored", p.max_censored)?;
                c.quadrature(p.quadrature)
            }
            Section::Fa1 => {
                let p = &self.fa1;
                if !(p.alpha > 0.5 && p.alpha < 1.0) {
                    return Err(field(c.section, "alpha", format!("must lie in (1/2, 1), got {}", p.alpha)));
                }
                if p.eps.is_empty() || p.eps.iter().any(|&e| !(e > 0.0 && e < 0.5)) {
                    return Err(field(c.section, "eps", "needs at least one value, each in (0, 1/2)"));
                }
                if p.eps.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(field(c.section, "eps", "must be strictly decreasing"));
                }
                c.at_least("n_paths", p.n_paths, 2)?;
                c.positive("du", p.du)?;
                c.positive("rel_tol", p.rel_tol)
            }
            Section::Calibration => {
                let p = &self.calibration;
                c.at_least("n_seeds", p.n_seeds, 1)?;
                c.paths(p.paths_per_seed, p.dt, p.macro_len)?;
                c.unit("max_false_positive", p.max_false_positive)?;
                c.at_least("control_paths", p.control_paths, 1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(ExperimentConfig::from_toml_str("").unwrap(), ExperimentConfig::default());
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c = ExperimentConfig::from_toml_str("[jacod]\nn_paths = 10\n").unwrap();
        assert_eq!(c.jacod.n_paths, 10);
        assert_eq!(c.jacod.seed, JacodParams::default().seed);
    }

    #[test]
    fn unknown_fields_are_named() {
        let err = ExperimentConfig::from_toml_str("[jacod]\nn_path = 10\n").unwrap_err();
        assert!(err.to_string().contains("n_path"), "{err}");
    }

    #[test]
    fn overrides_parse_literals() {
        let c = ExperimentConfig::default()
            .with_overrides(["jacod.n_paths=12", "fa1.eps=[0.1, 0.01]", "output=out/x", "emery.crossing=grid"])
            .unwrap();
        assert_eq!(c.jacod.n_paths, 12);
        assert_eq!(c.fa1.eps, vec![0.1, 0.01]);
        assert_eq!(c.output, PathBuf::from("out/x"));
        assert_eq!(c.emery.crossing, crate::experiments::brownian::Crossing::Grid);
        assert!(ExperimentConfig::default().with_overrides(["jacod.nope=1"]).is_err());
        assert!(ExperimentConfig::default().with_overrides(["nope.n_paths=1"]).is_err());
        assert!(ExperimentConfig::default().with_overrides(["jacod.n_paths=-3"]).is_err());
    }

    #[test]
    fn defaults_are_valid() {
        let c = ExperimentConfig::default();
        for s in [
            Section::Simulate,
            Section::Exact,
            Section::Cox,
            Section::Jacod,
            Section::Emery,
            Section::Pitman,
            Section::Honest,
            Section::Sup,
            Section::Fa1,
            Section::Calibration,
        ] {
            c.validate(s).unwrap_or_else(|e| panic!("{}: {e}", s.name()));
        }
    }

    #[test]
    fn validation_reports_the_field() {
        let bad = |sets: &[&str], s: Section, name: &str| {
            let c = ExperimentConfig::default().with_overrides(sets.iter().copied()).unwrap();
            match c.validate(s) {
                Err(ConfigError::Field { field, .. }) => assert_eq!(field, name),
                other => panic!("{sets:?}: {other:?}"),
            }
        };
        bad(&["jacod.dt=0.0"], Section::Jacod, "jacod.dt");
        bad(&["jacod.dt=0.3"], Section::Jacod, "jacod.dt");
        bad(&["jacod.n_paths=0"], Section::Jacod, "jacod.n_paths");
        bad(&["fa1.alpha=0.4"], Section::Fa1, "fa1.alpha");
        bad(&["fa1.eps=[0.001, 0.01]"], Section::Fa1, "fa1.eps");
        bad(&["emery.azema_times=[0.3]"], Section::Emery, "emery.azema_times");
        bad(&["sup.horizon=1.0"], Section::Sup, "sup.horizon");
        bad(&["honest.level=-1.0"], Section::Honest, "honest.level");
        bad(&["simulate.z0=0.0"], Section::Simulate, "simulate.z0");
    }
}
