//! One entry point per scenario kind.

mod basic;
mod budget;
mod gates;
mod sweep;

pub use sweep::SweepRow;

use hgsim_core::constants::TWO_PI;
use hgsim_core::exec::Execution;

use crate::config::{Kind, Scenario};
use crate::error::{Result, RunnerError};
use crate::output::Outcome;

/// Runs a validated scenario. The seed must already carry any command-line override.
pub fn run_scenario(s: &Scenario, exec: Execution) -> Result<Outcome> {
    if s.is_stochastic() {
        seed_of(s)?;
    }
    let out = match s.kind {
        Kind::Modes => basic::modes(s),
        Kind::BeamProfile => basic::beam_profile(s),
        Kind::Spectrum => basic::spectrum(s),
        Kind::SdfSingle => basic::sdf(s),
        Kind::Gate => gates::gate(s),
        Kind::Bell => gates::bell(s),
        Kind::RepeatGates => gates::repeat(s),
        Kind::ChainSweep => sweep::chain_sweep(s, exec),
        Kind::Budget => budget::budget(s, exec),
    }?;
    out.check_metrics()?;
    Ok(out)
}

pub(crate) fn seed_of(s: &Scenario) -> Result<u64> {
    s.seed.ok_or_else(|| {
        RunnerError::Validation(vec![format!(
            "seed: required for this {} scenario (set `seed` or pass --seed)",
            s.kind.name()
        )])
    })
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub(crate) fn to_mhz(w: f64) -> f64 {
    w / TWO_PI / 1e6
}

pub(crate) fn to_khz(w: f64) -> f64 {
    w / TWO_PI / 1e3
}
