//! End-to-end runs of the binary: exit status, artifacts, determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enlargement"))
        .arg("--output")
        .arg(out)
        .args(args)
        .env("ENLARGEMENT_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn model_file() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/models/early_signal.toml").into()
}

#[test]
fn bundled_model_is_viable() {
    let dir = tempfile::tempdir().unwrap();
    let file = model_file();
    for extra in [&[][..], &["--float"][..]] {
        let mut args = vec!["viability", file.as_str()];
        args.extend_from_slice(extra);
        let out = run(dir.path(), &args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("viability-early_signal/report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["pass"], true);
}

#[test]
fn exit_status_follows_the_checks() {
    let dir = tempfile::tempdir().unwrap();
    let pass = run(dir.path(), &["drift-check", "jacod_bridge", "--n-paths", "4000"]);
    assert_eq!(pass.status.code(), Some(0), "{}", String::from_utf8_lossy(&pass.stdout));
    let fail = run(dir.path(), &["--set", "jacod.drift_sign=-1.0", "drift-check", "jacod_bridge", "--n-paths", "4000"]);
    assert_eq!(fail.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("drift-check-jacod_bridge/report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "FAIL");
}

#[test]
fn invalid_config_names_the_field_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--set", "fa1.alpha=1.5", "divergence"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fa1.alpha"));
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[jacod]\nn_pathz = 3\n").unwrap();
    let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "drift-check", "jacod_bridge"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_pathz"));
    let out = run(dir.path(), &["azema-check", "future_infimum"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1, "only the config file");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[fa1]\nn_paths = 500\n\n[calibration]\nn_seeds = 2\n").unwrap();
    let args = ["--config", cfg.to_str().unwrap(), "divergence"];
    let read = |f: &str| fs::read(dir.path().join("out/divergence").join(f)).unwrap();
    assert!(run(&dir.path().join("out"), &args).status.success());
    let (manifest, report) = (read("manifest.json"), read("report.json"));
    assert!(run(&dir.path().join("out"), &args).status.success());
    assert_eq!(read("manifest.json"), manifest);
    assert_eq!(read("report.json"), report);
    let config = String::from_utf8(read("config.toml")).unwrap();
    assert!(config.contains("n_paths = 500"));
}
