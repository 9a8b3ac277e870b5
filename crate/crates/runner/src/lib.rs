//! Scenario runner for the Hermite-Gaussian trapped-ion simulator.
//!
//! A scenario is a TOML file naming one experiment kind plus the trap, beam, gate,
//! noise and solver settings it needs. [`parse_config`] validates it, [`execute`] runs
//! it and writes tables, a canonical config echo and a run report.

// Negated comparisons reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod scenarios;

pub use config::{parse_config, parse_str, to_toml, Format, Kind, Scenario};
pub use error::{Result, RunnerError};
pub use output::{emit_outputs, Outcome, Table};
pub use report::{execute, RunOptions, RunReport};
pub use scenarios::run_scenario;

/// Environment variable that sets the worker-pool size.
pub const WORKERS_ENV: &str = "HGSIM_WORKERS";

/// Parses a worker count from the environment value, if any.
pub fn workers_from_env(value: Option<&str>) -> Result<Option<usize>> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(RunnerError::Validation(vec![format!(
                "{WORKERS_ENV}: expected a positive integer, got {v:?}"
            )])),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_env_parsing() {
        assert_eq!(workers_from_env(None).unwrap(), None);
        assert_eq!(workers_from_env(Some("4")).unwrap(), Some(4));
        assert!(workers_from_env(Some("0")).is_err());
        assert!(workers_from_env(Some("many")).is_err());
    }
}
