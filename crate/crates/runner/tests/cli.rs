//! The `hgsim` binary: subcommands, flags, exit codes and the worker override.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn hgsim(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hgsim"));
    cmd.args(args).env_remove("HGSIM_WORKERS");
    if let Some(w) = workers {
        cmd.env("HGSIM_WORKERS", w);
    }
    cmd.output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn modes_writes_csv_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("three_ion_modes.toml");
    let out = hgsim(&["modes", "--config", path(&cfg), "--out", path(dir.path())], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("mode_1_mhz = 0.696"), "{stdout}");
    for f in ["positions.csv", "modes.csv", "scenario.toml", "report.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let modes = std::fs::read_to_string(dir.path().join("modes.csv")).unwrap();
    assert!(modes.starts_with("mode,frequency_mhz,ratio,"), "{modes}");
}

#[test]
fn json_format_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("beam_zero_pi.toml");
    let out = hgsim(
        &[
            "beam",
            "--config",
            path(&cfg),
            "--out",
            path(dir.path()),
            "--format",
            "json",
        ],
        None,
    );
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("beam_profile.json")).unwrap()).unwrap();
    let xt = v["metrics"]["gradient_crosstalk"].as_f64().unwrap();
    assert!((xt - 0.0104).abs() < 1e-3, "{xt}");
    assert!(!dir.path().join("profile.csv").exists());
}

#[test]
fn seed_flag_is_recorded_and_reproducible() {
    let cfg = config("thermometry_sampled.toml");
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = hgsim(
            &["sdf", "--config", path(&cfg), "--out", path(dir.path()), "--seed", seed],
            None,
        );
        assert!(out.status.success());
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(report["scenario"]["seed"].as_u64().unwrap().to_string(), seed);
        report["metrics"].clone()
    };
    assert_eq!(run("41"), run("41"));
    assert_ne!(run("41"), run("42"));
}

#[test]
fn kind_mismatch_is_a_config_error() {
    let cfg = config("three_ion_modes.toml");
    let out = hgsim(
        &[
            "gate",
            "--config",
            path(&cfg),
            "--out",
            path(tempfile::tempdir().unwrap().path()),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("modes"));
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "kind = \"gate\"\n[trap]\nion_count = 3\naxial_mhz = 0.402\n[gate]\npair = [0, 2]\nmediator = 0\n\
         detuning_khz = 10.0\nduration_us = 120.0\nramp_us = 20.0\ndrive_khz = 2.5\n[noise]\nheating_per_s = [-1.0]\n",
    )
    .unwrap();
    let out = hgsim(&["gate", "--config", path(&cfg), "--out", path(dir.path())], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("noise.heating_per_s[0]"));
}

#[test]
fn missing_file_is_an_io_error() {
    let out = hgsim(&["modes", "--config", "/nonexistent/hgsim.toml"], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn worker_override() {
    let cfg = config("three_ion_modes.toml");
    let dir = tempfile::tempdir().unwrap();
    let out = hgsim(&["modes", "--config", path(&cfg), "--out", path(dir.path())], Some("3"));
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["workers"], 3);

    let out = hgsim(
        &[
            "modes",
            "--config",
            path(&cfg),
            "--out",
            path(dir.path()),
            "--sequential",
        ],
        Some("3"),
    );
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["workers"], 1);

    let out = hgsim(&["modes", "--config", path(&cfg)], Some("zero"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("HGSIM_WORKERS"));
}
