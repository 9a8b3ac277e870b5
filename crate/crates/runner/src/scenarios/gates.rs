//! Two-qubit gate scenarios: single gates, Bell-state measurement and repeated gates.

use serde_json::json;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use hgsim_core::analysis::detection::sample_counts;
use hgsim_core::analysis::{
    correct_populations, detection_matrix, error_per_gate, pair_bell_fidelity, pair_contrast, parity_fit, parity_of,
    rotated_populations, DetectionModel,
};
use hgsim_core::chain::{chain_and_modes, ModeSet};
use hgsim_core::dynamics::trajectory::analytic_state_with;
use hgsim_core::dynamics::{displacement_trajectory, evolve_master_equation, GateSpec, NoiseModel, ReducedState};

use super::{linspace, seed_of, to_khz};
use crate::config::{BellSection, Method, RepeatSection, Scenario};
use crate::error::{Context, Result};
use crate::output::{to_value, Cell, Outcome, Table};

struct Setup {
    modes: ModeSet,
    gate: GateSpec,
    noise: NoiseModel,
}

/// Chain, calibrated gate with crosstalk applied, and noise.
fn setup(s: &Scenario) -> Result<Setup> {
    let (_, modes) = chain_and_modes(&s.trap_config()?).context("chain")?;
    let noise = s.noise_model(modes.len());
    noise.validate(modes.len()).context("noise")?;
    let gate = s.gate_spec(&modes)?.with_crosstalk(noise.crosstalk);
    Ok(Setup { modes, gate, noise })
}

/// Ion states after each of `1..=reps` gates, plus the master-equation record if one ran.
fn gate_states(
    s: &Scenario,
    st: &Setup,
    reps: usize,
) -> Result<(Vec<ReducedState>, Option<hgsim_core::dynamics::SimResult>)> {
    match s.solver().method {
        Method::Master => {
            let res = evolve_master_equation(&st.gate, &st.modes, &st.noise, &s.master_settings(reps))
                .context("master equation")?;
            Ok((res.gate_states.clone(), Some(res)))
        }
        Method::Analytic => {
            let states = (1..=reps)
                .map(|r| analytic_state_with(&st.gate, &st.modes, &st.noise.initial_nbar, r, None))
                .collect::<hgsim_core::Result<Vec<_>>>()
                .context("analytic gate map")?;
            Ok((states, None))
        }
    }
}

fn bits(index: usize, width: usize) -> String {
    (0..width)
        .rev()
        .map(|k| if index >> k & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn trajectory_table(st: &Setup) -> Result<(Table, f64, f64)> {
    let tau = st.gate.duration();
    let times: Vec<f64> = linspace(0.0, tau, 241);
    let tr = displacement_trajectory(&st.gate, &st.modes, &times).context("trajectory")?;
    let mut cols = vec!["time_us".to_string(), "theta".to_string()];
    for m in 0..st.modes.len() {
        cols.push(format!("alpha_{m}_re"));
        cols.push(format!("alpha_{m}_im"));
    }
    let mut table = Table::with_columns("trajectory", cols);
    for (i, t) in times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(t * 1e6).into(), tr.theta[i].into()];
        for a in &tr.alpha {
            row.push(a[i].0.into());
            row.push(a[i].1.into());
        }
        table.push(row);
    }
    Ok((table, tr.residual(), *tr.theta.last().expect("non-empty")))
}

pub fn gate(s: &Scenario) -> Result<Outcome> {
    let st = setup(s)?;
    let reps = s.gate.as_ref().expect("validated").repetitions;
    let (states, sim) = gate_states(s, &st, reps)?;
    let (a, b) = st.gate.pair;
    let last = states.last().expect("at least one gate");
    let fidelity = pair_bell_fidelity(last, a, b).context("Bell fidelity")?;

    let width = last.ions.len();
    let mut cols = vec!["time_us".to_string()];
    cols.extend((0..1usize << width).map(|i| format!("p_{}", bits(i, width))));
    let mut metrics = BTreeMap::from([
        ("bell_fidelity".to_string(), fidelity),
        ("drive_khz".to_string(), to_khz(st.gate.drive[a].abs())),
        ("gate_time_us".to_string(), st.gate.duration() * 1e6),
    ]);
    let populations = match &sim {
        Some(res) => {
            cols.extend(res.explicit_modes.iter().map(|m| format!("nbar_{m}")));
            let mut t = Table::with_columns("populations", cols);
            for (i, time) in res.time_grid.iter().enumerate() {
                let mut row: Vec<Cell> = vec![(time * 1e6).into()];
                row.extend(res.populations[i].iter().map(|p| Cell::Num(*p)));
                row.extend(res.mode_occupation[i].iter().map(|n| Cell::Num(*n)));
                t.push(row);
            }
            let d = &res.diagnostics;
            metrics.insert("fock".into(), d.fock as f64);
            metrics.insert("hilbert_dim".into(), d.hilbert_dim as f64);
            metrics.insert("max_trace_error".into(), d.max_trace_error);
            metrics.insert("min_eigenvalue".into(), d.min_eigenvalue);
            t
        }
        None => {
            let mut t = Table::with_columns("populations", cols);
            for (r, state) in states.iter().enumerate() {
                let mut row: Vec<Cell> = vec![((r + 1) as f64 * st.gate.duration() * 1e6).into()];
                row.extend(state.measured_populations().into_iter().map(Cell::Num));
                t.push(row);
            }
            t
        }
    };
    let (trajectory, residual, theta) = trajectory_table(&st)?;
    metrics.insert("residual_alpha".into(), residual);
    metrics.insert("pair_phase".into(), theta);
    Ok(Outcome {
        tables: vec![populations, trajectory],
        data: json!({
            "ions": last.ions,
            "gate": to_value(&st.gate)?,
            "fidelity": fidelity,
            "diagnostics": sim.as_ref().map(|r| to_value(&r.diagnostics)).transpose()?,
            "final_state": to_value(last)?,
        }),
        metrics,
    })
}

struct Detection<'a> {
    model: DetectionModel,
    cfg: &'a BellSection,
    seed: Option<u64>,
}

impl Detection<'_> {
    /// Measured and corrected outcome distributions for true probabilities `p`.
    fn observe(&self, p: &[f64; 4], stream: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        let total: f64 = p.iter().sum();
        let truth: Vec<f64> = p.iter().map(|x| (x / total).max(0.0)).collect();
        let mut measured = self.model.measure(&truth);
        if self.cfg.shots > 0 {
            let seed = self.seed.expect("checked").wrapping_add(stream);
            let counts = sample_counts(&measured, self.cfg.shots, seed).context("shot sampling")?;
            measured = counts.iter().map(|c| *c as f64 / self.cfg.shots as f64).collect();
        }
        let corrected = if self.cfg.correct {
            correct_populations(&measured, &self.model)
                .context("detection correction")?
                .populations
        } else {
            measured.clone()
        };
        Ok((measured, corrected))
    }
}

fn quad(v: &[f64]) -> [f64; 4] {
    [v[0], v[1], v[2], v[3]]
}

pub fn bell(s: &Scenario) -> Result<Outcome> {
    let st = setup(s)?;
    let reps = s.gate.as_ref().expect("validated").repetitions;
    let (states, _) = gate_states(s, &st, reps)?;
    let state = states.last().expect("at least one gate");
    let (a, b) = st.gate.pair;
    let cfg = s.bell.clone().unwrap_or(BellSection {
        f_bright: 1.0,
        f_dark: 1.0,
        shots: 15_000,
        correct: true,
        phases: 24,
    });
    let det = Detection {
        model: detection_matrix(cfg.f_bright, cfg.f_dark, 2).context("detection model")?,
        cfg: &cfg,
        seed: if cfg.shots > 0 { Some(seed_of(s)?) } else { None },
    };

    let pair = state.reduce(&[a, b]).expect("pair simulated");
    let truth = quad(&pair.measured_populations());
    let (meas, corr) = det.observe(&truth, 0)?;
    let mut pops = Table::new("populations", &["outcome", "p_true", "p_measured", "p_corrected"]);
    for i in 0..4 {
        pops.push(vec![
            Cell::Text(bits(i, 2)),
            truth[i].into(),
            meas[i].into(),
            corr[i].into(),
        ]);
    }

    let phases: Vec<f64> = (0..cfg.phases).map(|k| PI * k as f64 / cfg.phases as f64).collect();
    let mut parity = Table::new(
        "parity",
        &["phase_rad", "parity_true", "parity_measured", "parity_corrected"],
    );
    let (mut pm, mut pc, mut pt) = (Vec::new(), Vec::new(), Vec::new());
    for (k, phi) in phases.iter().enumerate() {
        let p = rotated_populations(state, a, b, *phi).context("analysis pulse")?;
        let (m, c) = det.observe(&p, 1 + k as u64)?;
        let (t, m, c) = (parity_of(&p), parity_of(&quad(&m)), parity_of(&quad(&c)));
        parity.push(vec![(*phi).into(), t.into(), m.into(), c.into()]);
        pt.push(t);
        pm.push(m);
        pc.push(c);
    }
    let fit_c = parity_fit(&phases, &pc).context("parity fit")?;
    let fit_m = parity_fit(&phases, &pm).context("parity fit")?;
    let fit_t = parity_fit(&phases, &pt).context("parity fit")?;
    let fid = |p: &[f64], c: f64| 0.5 * ((p[0] + p[3]).clamp(0.0, 1.0) + c.clamp(0.0, 1.0));
    let metrics = BTreeMap::from([
        ("fidelity".to_string(), fid(&corr, fit_c.contrast)),
        ("fidelity_uncorrected".to_string(), fid(&meas, fit_m.contrast)),
        ("fidelity_true".to_string(), fid(&truth, fit_t.contrast)),
        (
            "fidelity_state".to_string(),
            pair_bell_fidelity(state, a, b).context("Bell fidelity")?,
        ),
        ("population_sum".to_string(), corr[0] + corr[3]),
        ("contrast".to_string(), fit_c.contrast),
        ("contrast_err".to_string(), fit_c.contrast_err),
        ("detection_fidelity".to_string(), det.model.mean_fidelity()),
    ]);
    Ok(Outcome {
        tables: vec![pops, parity],
        data: json!({
            "pair": [a, b],
            "gate": to_value(&st.gate)?,
            "detection": to_value(&det.model)?,
            "parity_fit": to_value(&fit_c)?,
        }),
        metrics,
    })
}

pub fn repeat(s: &Scenario) -> Result<Outcome> {
    let st = setup(s)?;
    let cfg = s.repeat.clone().unwrap_or(RepeatSection {
        max_gates: 11,
        parity_pairs: vec![[0, 1], [1, 2], [0, 2]],
    });
    let (states, _) = gate_states(s, &st, cfg.max_gates)?;
    let (a, b) = st.gate.pair;
    let mut needed: Vec<usize> = cfg.parity_pairs.iter().flatten().copied().collect();
    needed.extend([a, b]);

    let mut cols = vec!["n_gates".to_string(), "fidelity".to_string()];
    cols.extend(
        cfg.parity_pairs
            .iter()
            .map(|p| format!("parity_{}{}", p[0] + 1, p[1] + 1)),
    );
    let mut table = Table::with_columns("repeat", cols);
    let mut fidelity = Vec::new();
    let mut contrasts: Vec<Vec<f64>> = vec![Vec::new(); cfg.parity_pairs.len()];
    for (i, state) in states.iter().enumerate() {
        let full = state.with_ground(&needed);
        let f = pair_bell_fidelity(&full, a, b).context("Bell fidelity")?;
        let mut row: Vec<Cell> = vec![(i + 1).into(), f.into()];
        for (k, p) in cfg.parity_pairs.iter().enumerate() {
            let c = pair_contrast(&full, p[0], p[1]).context("parity contrast")?.contrast;
            contrasts[k].push(c);
            row.push(c.into());
        }
        fidelity.push(f);
        table.push(row);
    }
    let odd: Vec<usize> = (1..=cfg.max_gates).step_by(2).collect();
    let f_odd: Vec<f64> = odd.iter().map(|n| fidelity[n - 1]).collect();
    let fit = error_per_gate(&odd, &f_odd, None).context("error per gate")?;
    let mut metrics = BTreeMap::from([
        ("epsilon_linear".to_string(), fit.linear),
        ("epsilon_linear_err".to_string(), fit.linear_err),
        ("fidelity_first".to_string(), fidelity[0]),
        ("fidelity_last".to_string(), *fidelity.last().expect("non-empty")),
    ]);
    if let Some(e) = fit.exponential {
        metrics.insert("epsilon_exponential".into(), e);
    }
    for (k, p) in cfg.parity_pairs.iter().enumerate() {
        let name = format!("{}{}", p[0] + 1, p[1] + 1);
        metrics.insert(format!("contrast_{name}_first"), contrasts[k][0]);
        metrics.insert(
            format!("contrast_{name}_last"),
            *contrasts[k].last().expect("non-empty"),
        );
    }
    Ok(Outcome {
        tables: vec![table],
        data: json!({ "pair": [a, b], "gate": to_value(&st.gate)?, "fit": to_value(&fit)? }),
        metrics,
    })
}
