//! Run orchestration: outputs, canonical config echo and the run report.

use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hgsim_core::exec::{worker_count, Execution};

use crate::config::{to_toml, Format, Scenario};
use crate::error::{Result, RunnerError};
use crate::output::{emit_outputs, json_text, round_json, to_value, Outcome};
use crate::scenarios::run_scenario;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub kind: String,
    /// Canonical scenario as run, seed override included.
    pub scenario: Value,
    pub version: String,
    pub git: String,
    pub wall_time_s: f64,
    pub workers: usize,
    pub format: Format,
    /// Files written, relative to the output directory; the report itself is last.
    pub manifest: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub format: Format,
    pub execution: Execution,
}

/// Short commit hash of the working directory, or `unknown`.
pub fn git_stamp() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| RunnerError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn relative(dir: &Path, p: &Path) -> String {
    p.strip_prefix(dir).unwrap_or(p).to_string_lossy().into_owned()
}

/// Runs the scenario, writes its outputs, `scenario.toml` and `report.json`.
pub fn execute(s: &Scenario, opts: &RunOptions) -> Result<(RunReport, Outcome)> {
    s.validate()?;
    let start = Instant::now();
    let outcome = run_scenario(s, opts.execution)?;
    let wall = start.elapsed().as_secs_f64();

    let mut files = emit_outputs(&outcome, &opts.out_dir, s.kind.name(), opts.format)?;
    let echo = opts.out_dir.join("scenario.toml");
    write(&echo, &to_toml(s)?)?;
    files.push(echo);
    let report_path = opts.out_dir.join("report.json");
    files.push(report_path.clone());

    let report = RunReport {
        kind: s.kind.name().to_string(),
        scenario: to_value(s)?,
        version: env!("CARGO_PKG_VERSION").to_string(),
        git: git_stamp(),
        wall_time_s: wall,
        workers: match opts.execution {
            Execution::Parallel => worker_count(),
            Execution::Sequential => 1,
        },
        format: opts.format,
        manifest: files.iter().map(|f| relative(&opts.out_dir, f)).collect(),
        metrics: outcome.metrics.clone(),
    };
    write(&report_path, &json_text(&round_json(to_value(&report)?))?)?;
    Ok((report, outcome))
}
