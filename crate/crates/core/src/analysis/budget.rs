//! Per-source gate-error budget.
//!
//! Each source is switched on alone and the per-gate error is the slope of the pair's
//! Bell fidelity over repeated gates, minus the same slope for the noiseless gate.
//! Dissipative sources run the master equation; crosstalk, pointing and spectator
//! modes are closed-form and therefore exact without a Fock cutoff.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::bell::pair_bell_fidelity;
use super::decay::error_per_gate;
use super::fidelity::uhlmann_fidelity;
use crate::chain::ModeSet;
use crate::dynamics::gate::GateSpec;
use crate::dynamics::master::{evolve_master_equation, MasterSettings, NoiseModel};
use crate::dynamics::pointing::pointing_scales;
use crate::dynamics::state::ReducedState;
use crate::dynamics::trajectory::{analytic_state_masked, analytic_state_with};
use crate::error::{Error, Result};
use crate::exec::{par_map, Execution};
use crate::optics::BeamProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSource {
    Dephasing,
    Heating,
    Crosstalk,
    Lifetime,
    Pointing,
    SpectatorModes,
}

impl ErrorSource {
    pub const ALL: [ErrorSource; 6] = [
        ErrorSource::Dephasing,
        ErrorSource::Heating,
        ErrorSource::Crosstalk,
        ErrorSource::Lifetime,
        ErrorSource::Pointing,
        ErrorSource::SpectatorModes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorSource::Dephasing => "dephasing",
            ErrorSource::Heating => "heating",
            ErrorSource::Crosstalk => "crosstalk",
            ErrorSource::Lifetime => "lifetime",
            ErrorSource::Pointing => "pointing",
            ErrorSource::SpectatorModes => "spectator_modes",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetPlan {
    /// Gate counts at which the pair fidelity is sampled.
    pub gate_counts: Vec<usize>,
    pub pointing_shots: usize,
    pub seed: u64,
    /// Beam whose gradient sets the pointing sensitivity.
    pub beam: BeamProfile,
    pub settings: MasterSettings,
    pub experimental: Option<f64>,
    pub execution: Execution,
}

impl BudgetPlan {
    pub fn new(beam: BeamProfile, seed: u64) -> Self {
        Self {
            gate_counts: (0..6).map(|i| 2 * i + 1).collect(),
            pointing_shots: 200,
            seed,
            beam,
            settings: MasterSettings {
                samples_per_gate: 2,
                ..Default::default()
            },
            experimental: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// Per-gate error attributed to each source.
    pub entries: BTreeMap<ErrorSource, f64>,
    pub sum: f64,
    /// Per-gate error with every source on together.
    pub full_model: f64,
    /// `full_model − sum`.
    pub gap: f64,
    /// Per-gate error of the noiseless gate, subtracted from every entry.
    pub baseline: f64,
    pub experimental: Option<f64>,
    pub gate_counts: Vec<usize>,
    /// Pair Bell fidelity at each gate count, per run (`noiseless`, each source, `full`).
    pub curves: BTreeMap<String, Vec<f64>>,
}

fn slope(counts: &[usize], f: &[f64]) -> Result<f64> {
    Ok(error_per_gate(counts, f, None)?.linear)
}

fn average(states: &[ReducedState]) -> ReducedState {
    let mut out = states[0].clone();
    for s in &states[1..] {
        out.rho.iter_mut().zip(&s.rho).for_each(|(a, b)| *a += b);
    }
    let w = 1.0 / states.len() as f64;
    out.rho.iter_mut().for_each(|a| *a *= w);
    out
}

enum Job {
    Master(String, NoiseModel, GateSpec),
    Analytic(String, GateSpec, Option<Vec<Vec<f64>>>),
}

/// Runs the budget for `gate` under `noise`.
pub fn build_error_budget(
    gate: &GateSpec,
    modes: &ModeSet,
    noise: &NoiseModel,
    plan: &BudgetPlan,
) -> Result<ErrorBudget> {
    gate.validate(modes)?;
    noise.validate(modes.len())?;
    let counts = &plan.gate_counts;
    if counts.len() < 3 || counts.contains(&0) {
        return Err(Error::InvalidArgument(
            "budget needs at least 3 positive gate counts".into(),
        ));
    }
    let reps = *counts.iter().max().expect("non-empty");
    let (a, b) = gate.pair;
    let quiet = NoiseModel {
        initial_nbar: noise.initial_nbar.clone(),
        ..NoiseModel::noiseless(modes.len())
    };

    let mut jobs = vec![Job::Analytic("noiseless".into(), gate.clone(), None)];
    if noise.t2.is_some() {
        jobs.push(Job::Master(
            ErrorSource::Dephasing.name().into(),
            NoiseModel {
                t2: noise.t2,
                dephasing: noise.dephasing,
                ..quiet.clone()
            },
            gate.clone(),
        ));
    }
    if noise.heating_rates.iter().any(|r| *r > 0.0) {
        jobs.push(Job::Master(
            ErrorSource::Heating.name().into(),
            NoiseModel {
                heating_rates: noise.heating_rates.clone(),
                heating: noise.heating,
                ..quiet.clone()
            },
            gate.clone(),
        ));
    }
    if noise.lifetime.is_some() {
        jobs.push(Job::Master(
            ErrorSource::Lifetime.name().into(),
            NoiseModel {
                lifetime: noise.lifetime,
                ..quiet.clone()
            },
            gate.clone(),
        ));
    }
    let crosstalk_gate = gate.with_crosstalk(noise.crosstalk);
    if noise.crosstalk != 0.0 {
        jobs.push(Job::Analytic(
            ErrorSource::Crosstalk.name().into(),
            crosstalk_gate.clone(),
            None,
        ));
    }
    if noise.pointing_sigma > 0.0 {
        let shots = pointing_scales(
            &plan.beam,
            noise.pointing_sigma,
            2,
            plan.pointing_shots.max(1),
            plan.seed,
        )?;
        let scales = shots
            .iter()
            .map(|s| {
                let mut v = vec![1.0; gate.drive.len()];
                v[a] = s[0];
                v[b] = s[1];
                v
            })
            .collect();
        jobs.push(Job::Analytic(
            ErrorSource::Pointing.name().into(),
            gate.clone(),
            Some(scales),
        ));
    }
    let dissipative = noise.t2.is_some() || noise.lifetime.is_some() || noise.heating_rates.iter().any(|r| *r > 0.0);
    if dissipative {
        jobs.push(Job::Master(
            "full".into(),
            NoiseModel {
                pointing_sigma: 0.0,
                crosstalk: 0.0,
                ..noise.clone()
            },
            crosstalk_gate.clone(),
        ));
    }

    let settings = MasterSettings {
        repetitions: reps,
        ..plan.settings.clone()
    };
    let results = par_map(plan.execution, &jobs, |job| -> Result<(String, Vec<f64>)> {
        match job {
            Job::Master(name, nm, g) => {
                let r = evolve_master_equation(g, modes, nm, &settings)?;
                let f = counts
                    .iter()
                    .map(|&n| pair_bell_fidelity(&r.gate_states[n - 1], a, b))
                    .collect::<Result<Vec<_>>>()?;
                Ok((name.clone(), f))
            }
            Job::Analytic(name, g, scales) => {
                let f = counts
                    .iter()
                    .map(|&n| {
                        let state = match scales {
                            None => analytic_state_with(g, modes, &noise.initial_nbar, n, None)?,
                            Some(s) => average(
                                &s.iter()
                                    .map(|v| analytic_state_with(g, modes, &noise.initial_nbar, n, Some(v)))
                                    .collect::<Result<Vec<_>>>()?,
                            ),
                        };
                        pair_bell_fidelity(&state, a, b)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((name.clone(), f))
            }
        }
    });
    let curves: BTreeMap<String, Vec<f64>> = results.into_iter().collect::<Result<_>>()?;
    let baseline = slope(counts, &curves["noiseless"])?;
    let excess = |name: &str| -> Result<f64> {
        Ok(match curves.get(name) {
            Some(f) => (slope(counts, f)? - baseline).max(0.0),
            None => 0.0,
        })
    };

    let mut entries = BTreeMap::new();
    for s in ErrorSource::ALL {
        if s != ErrorSource::SpectatorModes {
            entries.insert(s, excess(s.name())?);
        }
    }
    // Residual entanglement with non-mediator modes after one gate.
    let keep: Vec<bool> = (0..modes.len()).map(|m| m == gate.mediator).collect();
    let all = analytic_state_with(gate, modes, &noise.initial_nbar, 1, None)?;
    let masked = analytic_state_masked(gate, modes, &noise.initial_nbar, 1, None, Some(&keep))?;
    entries.insert(
        ErrorSource::SpectatorModes,
        (1.0 - uhlmann_fidelity(&all, &masked)?).max(0.0),
    );

    let sum: f64 = entries.values().sum();
    let full_model = if dissipative {
        excess("full")? + entries[&ErrorSource::Pointing] + entries[&ErrorSource::SpectatorModes]
    } else {
        sum
    };
    Ok(ErrorBudget {
        entries,
        sum,
        full_model,
        gap: full_model - sum,
        baseline,
        experimental: plan.experimental,
        gate_counts: counts.clone(),
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{chain_and_modes, TrapConfig};
    use crate::constants::{khz, mhz};
    use crate::dynamics::envelope::PulseEnvelope;
    use crate::dynamics::trajectory::calibrate_gate;
    use crate::optics::BeamKind;
    use std::f64::consts::PI;

    #[test]
    fn noiseless_budget_is_empty() {
        let m = chain_and_modes(&TrapConfig::ytterbium(3, mhz(0.402))).unwrap().1;
        let g = GateSpec::new(
            &m,
            (0, 2),
            0,
            khz(10.0),
            PulseEnvelope::sin2(120e-6, 20e-6),
            PI / 4.0,
            khz(2.5),
        )
        .unwrap();
        let g = calibrate_gate(&g, &m).unwrap();
        let beam = BeamProfile::new(BeamKind::Hg01Ideal, 1e-6, 0.0, 1.0).unwrap();
        let b = build_error_budget(&g, &m, &NoiseModel::noiseless(3), &BudgetPlan::new(beam, 1)).unwrap();
        assert_eq!(b.entries.len(), 6);
        assert!(b.entries.values().all(|e| *e < 1e-6), "{:?}", b.entries);
        assert!((b.sum - b.entries.values().sum::<f64>()).abs() < 1e-12);
        assert!(b.baseline.abs() < 1e-6);
    }

    #[test]
    fn crosstalk_and_pointing_are_small_and_seeded() {
        let m = chain_and_modes(&TrapConfig::ytterbium(3, mhz(0.402))).unwrap().1;
        let g = GateSpec::new(
            &m,
            (0, 2),
            0,
            khz(10.0),
            PulseEnvelope::sin2(120e-6, 20e-6),
            PI / 4.0,
            khz(2.5),
        )
        .unwrap();
        let g = calibrate_gate(&g, &m).unwrap();
        let beam = BeamProfile::new(BeamKind::Hg01Ideal, 1e-6, 0.0, 1.0).unwrap();
        let noise = NoiseModel {
            crosstalk: 0.015,
            pointing_sigma: 20e-9,
            ..NoiseModel::noiseless(3)
        };
        let plan = BudgetPlan::new(beam, 7);
        let b = build_error_budget(&g, &m, &noise, &plan).unwrap();
        let x = b.entries[&ErrorSource::Crosstalk];
        assert!(x > 1e-3 && x < 1e-2, "{x}");
        let p = b.entries[&ErrorSource::Pointing];
        assert!(p > 0.0 && p < 1e-3, "{p}");
        assert_eq!(b, build_error_budget(&g, &m, &noise, &plan).unwrap());
    }
}
