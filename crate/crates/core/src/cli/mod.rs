//! Batch runner behind the `enlargement` binary.
//!
//! Each subcommand resolves the configuration (defaults, then the config
//! file, then `--set` and flag overrides), validates the sections it reads,
//! runs, and writes a run directory. The exit status is 0 iff every check
//! passes.

pub mod artifacts;
pub mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::experiments::bessel::{localtime_summary, run_honest, run_honest_azema, run_pitman};
use crate::experiments::brownian::{run_cox_azema, run_emery, run_emery_azema, run_hypothesis_h, run_jacod};
use crate::experiments::calibration::run_calibration;
use crate::experiments::fa1::run_fa1;
use crate::experiments::supremum::run_sup;
use crate::experiments::{Check, CriterionOutcome};
use crate::finite_prob::model_file::FiniteModel;
use crate::finite_prob::{FiniteError, Scalar};
use crate::formulas::{EnlargementModel, Feature, FormulaError, ModelName, ModelParams};
use crate::mctest::{qv_test, Verdict};
use crate::simulate::export::{write_cache, write_csv};
use crate::simulate::functionals::realized_qv;
use crate::simulate::{gen_bes3, gen_brownian, SimError};
use artifacts::{RunDir, REPORT_SCHEMA_VERSION};
use config::{ConfigError, ExperimentConfig, Process, Section};

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "ENLARGEMENT_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "enlargement", version, about = "Drift checks for enlarged filtrations")]
pub struct Cli {
    /// TOML configuration file; missing fields keep their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a field, e.g. `--set jacod.n_paths=1000`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub sets: Vec<String>,
    /// Parent directory of the run directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads; defaults to the environment variable, then all cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides shared by the Monte Carlo subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    #[arg(long)]
    pub n_paths: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a path bundle and check its quadratic variation.
    Simulate {
        #[arg(long, value_enum)]
        process: Option<ProcessArg>,
        #[arg(long)]
        horizon: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Conditional-mean-zero test of the compensated increments of a model.
    DriftCheck {
        /// Registry name, e.g. `jacod_bridge`.
        model: String,
        #[command(flatten)]
        common: Common,
    },
    /// Survival frequencies of a random time against its Azéma supermartingale.
    AzemaCheck {
        model: String,
        #[command(flatten)]
        common: Common,
    },
    /// Exact structure-condition analysis of a finite model file.
    Viability {
        model_file: PathBuf,
        /// Analyse in floating point instead of exact rationals.
        #[arg(long)]
        float: bool,
    },
    /// Profile of the companion integral as the horizon approaches 1.
    Divergence {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Occupation estimate of the local time in the future-infimum identity.
    Localtime {
        #[arg(long)]
        eps: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// False-positive rate of the binned test on a null model, and the
    /// negative controls.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ProcessArg {
    Brownian,
    Bes3,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Model(#[from] FormulaError),
    #[error("model file: {0}")]
    Finite(#[from] FiniteError),
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Unsupported(String),
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// What a finished run reports back.
#[derive(Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub verdict: Verdict,
    pub pass: bool,
    pub text: String,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    generator: &'static str,
    subcommand: &'a str,
    model: Option<&'a str>,
    verdict: Verdict,
    pass: bool,
    checks: &'a [Check],
    details: &'a serde_json::Value,
}

#[derive(Serialize)]
struct Metadata {
    started_unix: u64,
    runtime_seconds: f64,
    workers: usize,
}

/// Features each drift experiment extracts from its paths.
fn provided_features(model: ModelName) -> &'static [Feature] {
    use Feature::*;
    match model {
        ModelName::JacodBridge => &[W, WTerminal],
        ModelName::ProgressiveCox => &[W, CumulativeIntensity, RandomTime],
        ModelName::HonestLastPassage => &[Z, RandomTime],
        ModelName::SupInitial => &[W, RunningSup, RecordTime],
        ModelName::EmeryLastPassage => &[W, WTerminal, RandomTime],
        ModelName::FutureInfimum => &[Z, FutureInf],
    }
}

fn section_of(model: ModelName) -> Section {
    match model {
        ModelName::JacodBridge => Section::Jacod,
        ModelName::ProgressiveCox => Section::Cox,
        ModelName::HonestLastPassage => Section::Honest,
        ModelName::SupInitial => Section::Sup,
        ModelName::EmeryLastPassage => Section::Emery,
        ModelName::FutureInfimum => Section::Pitman,
    }
}

/// Resolves the model and checks that its experiment supplies every
/// feature the drift needs, before anything is simulated.
fn resolve_model(name: &str, cfg: &ExperimentConfig) -> Result<EnlargementModel, CliError> {
    let name: ModelName = name.parse()?;
    let params = ModelParams { level: cfg.honest.level, ..ModelParams::default() };
    let model = EnlargementModel::new(name, params)?;
    let provided = provided_features(name);
    if let Some(f) = model.required_features().iter().find(|f| !provided.contains(f)) {
        return Err(FormulaError::MissingFeature { model: name.as_str(), feature: f.as_str() }.into());
    }
    Ok(model)
}

fn azema_model(name: &str, cfg: &ExperimentConfig) -> Result<EnlargementModel, CliError> {
    let m = resolve_model(name, cfg)?;
    if m.has_azema() {
        Ok(m)
    } else {
        Err(CliError::Unsupported(format!("{} has no Azéma supermartingale", m.name)))
    }
}

/// `section.field` names the common flags map to.
fn common_sets(section: Section, localtime: bool, c: &Common) -> Vec<String> {
    let s = section.name();
    let (n, dt, seed) = match (section, localtime) {
        (Section::Pitman, true) => ("localtime_paths", "localtime_dt", "seed"),
        (Section::Calibration, _) => ("paths_per_seed", "dt", "base_seed"),
        _ => ("n_paths", "dt", "seed"),
    };
    let mut out = Vec::new();
    if let Some(v) = c.n_paths {
        out.push(format!("{s}.{n}={v}"));
    }
    if let Some(v) = c.dt {
        out.push(format!("{s}.{dt}={v:?}"));
    }
    if let Some(v) = c.seed {
        out.push(format!("{s}.{seed}={v}"));
    }
    out
}

fn toml_list(xs: &[f64]) -> String {
    format!("[{}]", xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", "))
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Simulate { .. } => "simulate",
            Self::DriftCheck { .. } => "drift-check",
            Self::AzemaCheck { .. } => "azema-check",
            Self::Viability { .. } => "viability",
            Self::Divergence { .. } => "divergence",
            Self::Localtime { .. } => "localtime",
            Self::Calibrate { .. } => "calibrate",
        }
    }

    fn model(&self) -> Option<&str> {
        match self {
            Self::DriftCheck { model, .. } | Self::AzemaCheck { model, .. } => Some(model),
            _ => None,
        }
    }

    /// The section the subcommand reads, and overrides from its flags.
    fn section_and_sets(&self) -> Result<(Option<Section>, Vec<String>), CliError> {
        Ok(match self {
            Self::Simulate { process, horizon, common } => {
                let mut sets = common_sets(Section::Simulate, false, common);
                if let Some(p) = process {
                    let p = match p {
                        ProcessArg::Brownian => "brownian",
                        ProcessArg::Bes3 => "bes3",
                    };
                    sets.push(format!("simulate.process={p:?}"));
                }
                if let Some(h) = horizon {
                    sets.push(format!("simulate.horizon={h:?}"));
                }
                (Some(Section::Simulate), sets)
            }
            Self::DriftCheck { model, common } | Self::AzemaCheck { model, common } => {
                let section = section_of(model.parse()?);
                (Some(section), common_sets(section, false, common))
            }
            Self::Viability { .. } => (None, Vec::new()),
            Self::Divergence { alpha, eps, common } => {
                if common.dt.is_some() {
                    return Err(CliError::Unsupported("divergence is simulated exactly; use --set fa1.du=... for its step".into()));
                }
                let mut sets = common_sets(Section::Fa1, false, common);
                if let Some(a) = alpha {
                    sets.push(format!("fa1.alpha={a:?}"));
                }
                if let Some(e) = eps {
                    sets.push(format!("fa1.eps={}", toml_list(e)));
                }
                (Some(Section::Fa1), sets)
            }
            Self::Localtime { eps, common } => {
                let mut sets = common_sets(Section::Pitman, true, common);
                if let Some(e) = eps {
                    sets.push(format!("pitman.eps={e:?}"));
                }
                (Some(Section::Pitman), sets)
            }
            Self::Calibrate { common } => (Some(Section::Calibration), common_sets(Section::Calibration, false, common)),
        })
    }
}

/// Resolves the configuration for `cli` without running anything.
pub fn resolve_config(cli: &Cli) -> Result<(ExperimentConfig, Option<Section>), CliError> {
    let base = match &cli.config {
        Some(path) => ExperimentConfig::from_toml_str(&fs::read_to_string(path).map_err(io_at(path))?)?,
        None => ExperimentConfig::default(),
    };
    let (section, flag_sets) = cli.command.section_and_sets()?;
    let mut cfg = base.with_overrides(cli.sets.iter().chain(&flag_sets).map(String::as_str))?;
    if let Some(out) = &cli.output {
        cfg.output = out.clone();
    }
    if let Some(s) = section {
        cfg.validate(s)?;
    }
    match &cli.command {
        Command::DriftCheck { model, .. } => {
            resolve_model(model, &cfg)?;
        }
        Command::AzemaCheck { model, .. } => azema_model(model, &cfg).map(drop)?,
        _ => {}
    }
    Ok((cfg, section))
}

fn simulate(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<CriterionOutcome, CliError> {
    let p = &cfg.simulate;
    let pb = match p.process {
        Process::Brownian => gen_brownian(p.n_paths, p.dt, p.horizon, p.seed)?,
        Process::Bes3 => gen_bes3(p.n_paths, p.dt, p.horizon, p.z0, p.seed)?,
    };
    let mut cache = Vec::new();
    write_cache(&pb, &mut cache).expect("writing to memory");
    let cache_path = run.write("paths.bin", &cache).map_err(io_at(run.root()))?;
    if p.csv {
        let mut text = Vec::new();
        write_csv(&pb, &mut text).expect("writing to memory");
        run.write("paths.csv", &text).map_err(io_at(run.root()))?;
    }
    let steps = pb.grid().n_steps();
    let qv: Vec<f64> = pb.paths().map(|x| realized_qv(x, steps)).collect();
    let q = qv_test("quadratic variation", &qv, p.horizon, p.qv_tolerance);
    let mut checks = vec![Check::new(
        q.name.clone(),
        q.pass,
        format!("mean {:.5} +- {:.5} vs {}, relative error {:.4} (tolerance {})", q.mean, q.se, q.expected, q.relative_error, q.tolerance),
    )];
    if p.process == Process::Bes3 {
        let min = pb.values().iter().copied().fold(f64::INFINITY, f64::min);
        checks.push(Check::new("positivity", min > 0.0, format!("smallest value {min:.3e}")));
    }
    let details = json!({
        "params": p,
        "qv": q,
        "bundle": { "n_paths": pb.n_paths(), "grid_points": pb.grid().len(), "cache": cache_path.file_name().map(|f| f.to_string_lossy()) },
    });
    Ok(CriterionOutcome::new(0, "path bundle", checks, details))
}

fn viability(path: &Path, float: bool) -> Result<CriterionOutcome, CliError> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    let model = FiniteModel::from_toml_str(&text)?;
    let report = if float { model.analyze(|q| q.to_f64())? } else { model.analyze(|q| q.clone())? };
    let mut checks = vec![
        Check::new("drift images match", report.drift_images_match, "fitted multiplier reproduces the drift of the basis"),
        Check::new("kernel identity", report.kernel_identity_holds, "jump kernels sum to one"),
    ];
    if let Some(pos) = &report.positivity {
        let min = pos.min_value.as_deref().unwrap_or("none");
        checks.push(Check::new(
            "positivity",
            pos.pass,
            format!("smallest 1 + phi dN is {min}; {} support mismatches", pos.set_equality_violations.len()),
        ));
    }
    if let Some(v) = &report.viability {
        let max = v.jump_sum_max.as_deref().unwrap_or("none");
        checks.push(Check::new("viability", v.pass, format!("largest terminal jump sum {max}")));
    }
    if let Some(e) = report.multiplier_error.as_ref().or(report.solve_error.as_ref()) {
        checks.push(Check::new("structure solution", false, e.clone()));
    }
    for m in &report.deflated_martingales {
        checks.push(Check::new(
            format!("deflated {} is a martingale", m.name),
            m.exact_martingale,
            match (m.epoch, m.residual) {
                (Some(k), Some(r)) => format!("residual {r:.3e} at epoch {k}"),
                (Some(k), None) => format!("nonzero residual at epoch {k}"),
                _ => "zero residual".into(),
            },
        ));
    }
    checks.push(Check::new("overall", report.pass, "all exact conditions hold"));
    let details = serde_json::to_value(&report).expect("serialisable");
    Ok(CriterionOutcome::new(1, "finite model", checks, details))
}

fn localtime(cfg: &ExperimentConfig) -> CriterionOutcome {
    let p = &cfg.pitman;
    let lt = localtime_summary(p);
    let check = Check::new(
        "local-time identity",
        lt.refined.relative_error_closed <= p.localtime_tolerance,
        format!(
            "occupation {:.4} vs {:.4} +- {:.4}, relative error {:.4} (tolerance {}); base grid alone {:.4} (error {:.4})",
            lt.refined.mean_closed,
            lt.refined.mean_rhs,
            lt.refined.se_rhs,
            lt.refined.relative_error_closed,
            p.localtime_tolerance,
            lt.base_grid.mean_closed,
            lt.base_grid.relative_error_closed
        ),
    );
    CriterionOutcome::new(5, "local-time identity", vec![check], json!({ "params": p, "localtime": lt }))
}

fn execute(cli: &Cli, cfg: &ExperimentConfig, run: &mut RunDir) -> Result<CriterionOutcome, CliError> {
    Ok(match &cli.command {
        Command::Simulate { .. } => simulate(cfg, run)?,
        Command::DriftCheck { model, .. } => match resolve_model(model, cfg)?.name {
            ModelName::JacodBridge => run_jacod(&cfg.jacod),
            ModelName::ProgressiveCox => run_hypothesis_h(&cfg.cox),
            ModelName::HonestLastPassage => run_honest(&cfg.honest),
            ModelName::SupInitial => run_sup(&cfg.sup),
            ModelName::EmeryLastPassage => run_emery(&cfg.emery),
            ModelName::FutureInfimum => run_pitman(&cfg.pitman),
        },
        Command::AzemaCheck { model, .. } => {
            match azema_model(model, cfg)?.name {
                ModelName::ProgressiveCox => run_cox_azema(&cfg.cox),
                ModelName::HonestLastPassage => run_honest_azema(&cfg.honest),
                ModelName::EmeryLastPassage => run_emery_azema(&cfg.emery),
                other => unreachable!("{other} has an Azéma evaluator but no experiment"),
            }
        }
        Command::Viability { model_file, float } => viability(model_file, *float)?,
        Command::Divergence { .. } => run_fa1(&cfg.fa1),
        Command::Localtime { .. } => localtime(cfg),
        Command::Calibrate { .. } => run_calibration(&cfg.calibration),
    })
}

fn run_dir_name(cmd: &Command) -> String {
    match cmd {
        Command::Viability { model_file, .. } => {
            format!("viability-{}", model_file.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default())
        }
        other => match other.model() {
            Some(m) => format!("{}-{}", other.name(), m.replace('-', "_")),
            None => other.name().into(),
        },
    }
}

/// Runs one subcommand and writes its run directory.
pub fn run(cli: &Cli) -> Result<RunSummary, CliError> {
    let (cfg, _) = resolve_config(cli)?;
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let dir = cfg.output.join(run_dir_name(&cli.command));
    let mut run = RunDir::create(&dir).map_err(io_at(&dir))?;
    run.write("config.toml", cfg.to_toml_string().as_bytes()).map_err(io_at(&dir))?;
    let outcome = execute(cli, &cfg, &mut run)?;
    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        generator: concat!("enlargement ", env!("CARGO_PKG_VERSION")),
        subcommand: cli.command.name(),
        model: cli.command.model(),
        verdict: outcome.verdict,
        pass: outcome.pass,
        checks: &outcome.checks,
        details: &outcome.details,
    };
    run.write_json("report.json", &report).map_err(io_at(&dir))?;
    for (stem, csv) in &outcome.tables {
        run.write_table(stem, csv).map_err(io_at(&dir))?;
    }
    let meta = Metadata { started_unix, runtime_seconds: started.elapsed().as_secs_f64(), workers: rayon::current_num_threads() };
    let dir = run.seal(&meta).map_err(io_at(&dir))?;
    let mut text = String::new();
    for c in &outcome.checks {
        text.push_str(&format!("[{}] {}: {}\n", c.verdict, c.name, c.summary));
    }
    text.push_str(&format!("{} {}: {}\n", cli.command.name(), outcome.verdict, dir.display()));
    Ok(RunSummary { dir, verdict: outcome.verdict, pass: outcome.pass, text })
}

/// Caps the global thread pool at `--workers` or the environment variable.
fn init_workers(flag: Option<usize>) -> Result<(), String> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| format!("{WORKERS_ENV}: not a worker count: {v:?}"))?),
            Err(_) => None,
        },
    };
    match n {
        Some(0) => Err("worker count must be at least 1".into()),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string()),
        None => Ok(()),
    }
}

/// Entry point of the binary: 0 when every check passes, 1 when a check
/// fails or is inconclusive, 2 on usage or configuration errors.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_workers(cli.workers) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(summary) => {
            print!("{}", summary.text);
            if summary.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("enlargement").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn every_registry_model_has_an_experiment() {
        let cfg = ExperimentConfig::default();
        for m in ModelName::ALL {
            resolve_model(m.as_str(), &cfg).unwrap();
        }
        assert!(matches!(resolve_model("nope", &cfg), Err(CliError::Model(FormulaError::UnknownModel(_)))));
    }

    #[test]
    fn invalid_level_is_rejected_before_simulation() {
        let cli = parse(&["--set", "honest.level=-1.0", "drift-check", "honest_last_passage"]);
        let err = resolve_config(&cli).unwrap_err();
        assert!(err.to_string().contains("honest.level"), "{err}");
    }

    #[test]
    fn flags_map_to_section_fields() {
        let cli = parse(&["calibrate", "--n-paths", "10", "--seed", "3"]);
        let (cfg, _) = resolve_config(&cli).unwrap();
        assert_eq!((cfg.calibration.paths_per_seed, cfg.calibration.base_seed), (10, 3));
        let cli = parse(&["localtime", "--n-paths", "7", "--dt", "0.0009765625", "--eps", "0.02"]);
        let (cfg, _) = resolve_config(&cli).unwrap();
        assert_eq!((cfg.pitman.localtime_paths, cfg.pitman.localtime_dt, cfg.pitman.eps), (7, 1.0 / 1024.0, 0.02));
        let cli = parse(&["divergence", "--eps", "0.1,0.01"]);
        assert_eq!(resolve_config(&cli).unwrap().0.fa1.eps, vec![0.1, 0.01]);
        let cli = parse(&["drift-check", "jacod-bridge", "--dt", "0.3"]);
        assert!(matches!(resolve_config(&cli), Err(CliError::Config(ConfigError::Field { .. }))));
    }

    #[test]
    fn small_simulate_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let cli = parse(&["--output", out, "simulate", "--process", "bes3", "--n-paths", "50", "--dt", "0.0078125"]);
        let s = run(&cli).unwrap();
        assert!(s.pass, "{}", s.text);
        for f in ["config.toml", "report.json", "manifest.json", "metadata.json", "paths.bin", "paths.csv"] {
            assert!(s.dir.join(f).exists(), "{f}");
        }
    }
}
