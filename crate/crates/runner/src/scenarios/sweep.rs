//! Chain-length sweep: one gate per (chain, mediator) point on the outermost ion pair.

use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;

use hgsim_core::analysis::pair_bell_fidelity;
use hgsim_core::chain::{chain_and_modes, TrapConfig};
use hgsim_core::constants::mhz;
use hgsim_core::dynamics::evolve_master_equation;
use hgsim_core::exec::{par_map, Execution};

use super::{to_khz, to_mhz};
use crate::config::{build_gate, envelope, noise_model, per_mode, Scenario, SweepGate, SweepPoint};
use crate::error::{Context, Result, RunnerError};
use crate::output::{to_value, Cell, Outcome, Table};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub ion_count: usize,
    pub axial_mhz: f64,
    pub gate: String,
    pub mediator_mhz: f64,
    pub drive_khz: f64,
    pub heating_per_s: f64,
    pub initial_nbar: f64,
    pub fidelity: f64,
    pub measured: Option<f64>,
    pub fock: usize,
}

fn run_point(s: &Scenario, p: &SweepPoint, g: &SweepGate) -> Result<SweepRow> {
    let ctx = format!("{} ions, gate {}", p.ion_count, g.label);
    let trap = TrapConfig::ytterbium(p.ion_count, mhz(p.axial_mhz));
    let (_, modes) = chain_and_modes(&trap).context(&ctx)?;
    let n = modes.len();
    let mut noise = noise_model(&s.noise_section(), n);
    noise.heating_rates = per_mode(&p.heating_per_s, n);
    noise.initial_nbar = per_mode(&p.initial_nbar, n);
    let gate = build_gate(
        &modes,
        (0, p.ion_count - 1),
        g.mediator,
        g.detuning_khz,
        envelope(g.duration_us, g.ramp_us, g.shape),
        g.target_phase_pi,
        g.drive_khz,
        true,
    )
    .map_err(|e| match e {
        RunnerError::Core { context, source } => RunnerError::Core {
            context: format!("{ctx}: {context}"),
            source,
        },
        other => other,
    })?
    .with_crosstalk(noise.crosstalk);
    let res = evolve_master_equation(&gate, &modes, &noise, &s.master_settings(1)).context(&ctx)?;
    let fidelity = pair_bell_fidelity(res.final_ions(), 0, p.ion_count - 1).context(&ctx)?;
    Ok(SweepRow {
        ion_count: p.ion_count,
        axial_mhz: p.axial_mhz,
        gate: g.label.clone(),
        mediator_mhz: to_mhz(modes.frequencies[g.mediator]),
        drive_khz: to_khz(gate.drive[0].abs()),
        heating_per_s: noise.heating_rates[g.mediator],
        initial_nbar: noise.initial_nbar[g.mediator],
        fidelity,
        measured: p.measured.get(&g.label).copied(),
        fock: res.diagnostics.fock,
    })
}

pub fn chain_sweep(s: &Scenario, exec: Execution) -> Result<Outcome> {
    let sw = s.sweep.as_ref().expect("validated");
    let jobs: Vec<(&SweepPoint, &SweepGate)> = sw
        .points
        .iter()
        .flat_map(|p| sw.gates.iter().map(move |g| (p, g)))
        .collect();
    let mut rows = par_map(exec, &jobs, |(p, g)| run_point(s, p, g))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        (a.ion_count, &a.gate)
            .cmp(&(b.ion_count, &b.gate))
            .then(a.axial_mhz.total_cmp(&b.axial_mhz))
    });
    let mut table = Table::new(
        "sweep",
        &[
            "ion_count",
            "axial_mhz",
            "gate",
            "mediator_mhz",
            "drive_khz",
            "heating_per_s",
            "initial_nbar",
            "fidelity",
            "measured",
            "difference",
        ],
    );
    let mut metrics = BTreeMap::new();
    for r in &rows {
        table.push(vec![
            r.ion_count.into(),
            r.axial_mhz.into(),
            r.gate.as_str().into(),
            r.mediator_mhz.into(),
            r.drive_khz.into(),
            r.heating_per_s.into(),
            r.initial_nbar.into(),
            r.fidelity.into(),
            Cell::from(r.measured),
            Cell::from(r.measured.map(|m| r.fidelity - m)),
        ]);
        metrics.insert(format!("fidelity_{}_n{}", r.gate, r.ion_count), r.fidelity);
    }
    Ok(Outcome {
        tables: vec![table],
        data: json!({ "rows": to_value(&rows)? }),
        metrics,
    })
}
