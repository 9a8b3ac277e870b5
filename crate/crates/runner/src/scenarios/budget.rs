//! Per-source error budget of one gate.

use serde_json::json;
use std::collections::BTreeMap;

use hgsim_core::analysis::{build_error_budget, BudgetPlan, ErrorSource};
use hgsim_core::chain::chain_and_modes;
use hgsim_core::exec::Execution;
use hgsim_core::optics::{BeamKind, BeamProfile};

use super::seed_of;
use crate::config::Scenario;
use crate::error::{Context, Result};
use crate::output::{to_value, Cell, Outcome, Table};

pub fn budget(s: &Scenario, exec: Execution) -> Result<Outcome> {
    let (chain, modes) = chain_and_modes(&s.trap_config()?).context("chain")?;
    let noise = s.noise_model(modes.len());
    let gate = s.gate_spec(&modes)?;
    let beam = match &s.beam {
        Some(_) => s.beam_at(chain.positions[gate.pair.0])?,
        // Only the pointing source reads the beam, and it is off here.
        None => BeamProfile::new(BeamKind::Hg01Ideal, 1e-6, 0.0, 0.0).context("beam")?,
    };
    let seed = if s.is_stochastic() {
        seed_of(s)?
    } else {
        s.seed.unwrap_or(0)
    };
    let mut plan = BudgetPlan::new(beam, seed);
    plan.execution = exec;
    let base = s.master_settings(1);
    plan.settings.fock = base.fock;
    plan.settings.max_fock = base.max_fock;
    plan.settings.tolerances = base.tolerances;
    if let Some(cfg) = &s.budget {
        plan.gate_counts = cfg.gate_counts.clone();
        plan.pointing_shots = cfg.pointing_shots;
        plan.experimental = cfg.experimental;
    }
    let budget = build_error_budget(&gate, &modes, &noise, &plan).context("error budget")?;
    let reference = s.budget.as_ref().map(|b| b.reference.clone()).unwrap_or_default();

    let mut entries = Table::new("budget", &["source", "error", "reference"]);
    let mut metrics = BTreeMap::new();
    for src in ErrorSource::ALL {
        let e = budget.entries.get(&src).copied().unwrap_or(0.0);
        entries.push(vec![
            src.name().into(),
            e.into(),
            Cell::from(reference.get(src.name()).copied()),
        ]);
        metrics.insert(src.name().to_string(), e);
    }
    for (name, value) in [
        ("sum", budget.sum),
        ("full_model", budget.full_model),
        ("gap", budget.gap),
        ("baseline", budget.baseline),
    ] {
        entries.push(vec![
            name.into(),
            value.into(),
            Cell::from(reference.get(name).copied()),
        ]);
        metrics.insert(name.to_string(), value);
    }
    if let Some(x) = budget.experimental {
        entries.push(vec!["experimental".into(), Cell::Empty, x.into()]);
    }

    let names: Vec<&String> = budget.curves.keys().collect();
    let mut cols = vec!["n_gates".to_string()];
    cols.extend(names.iter().map(|n| n.to_string()));
    let mut curves = Table::with_columns("curves", cols);
    for (i, n) in budget.gate_counts.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(*n).into()];
        row.extend(names.iter().map(|k| Cell::Num(budget.curves[*k][i])));
        curves.push(row);
    }
    Ok(Outcome {
        tables: vec![entries, curves],
        data: json!({ "gate": to_value(&gate)?, "budget": to_value(&budget)? }),
        metrics,
    })
}
