//! Lindblad master-equation evolution of a gate with noise.
//!
//! The mediator mode is kept as a truncated Fock space. Modes not modelled explicitly
//! enter through their geometric phase only, as an Ising term with the rate
//! `dΘ_jk/dt`, which is exact up to their (tiny) residual displacement.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::envelope::envelope_integral;
use super::gate::GateSpec;
use super::integrator::{Dopri5, Tolerances};
use super::operators::{self as ops, Space, SparseOp};
use super::state::{thermal_distribution, ReducedState};
use super::trajectory::displacement_trajectory;
use crate::chain::ModeSet;
use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Dephasing {
    /// One `σz` channel per driven target ion.
    #[default]
    Independent,
    /// A single channel `σz₁ + σz₂` shared by the pair.
    Correlated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Heating {
    /// `√ṅ a†` only.
    #[default]
    UpOnly,
    /// `√ṅ a†` and `√ṅ a`.
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Ramsey coherence time in s (contrast `exp(−t/T2)`); `None` disables dephasing.
    pub t2: Option<f64>,
    pub dephasing: Dephasing,
    /// Heating rate per mode, quanta/s.
    pub heating_rates: Vec<f64>,
    pub heating: Heating,
    /// Lifetime of `|1⟩` in s; `None` disables leakage.
    pub lifetime: Option<f64>,
    /// Relative state-dependent force on nearest-neighbour spectators.
    pub crosstalk: f64,
    /// Standard deviation of quasi-static beam offsets, m.
    pub pointing_sigma: f64,
    /// Initial thermal occupation per mode.
    pub initial_nbar: Vec<f64>,
}

impl NoiseModel {
    pub fn noiseless(mode_count: usize) -> Self {
        Self {
            t2: None,
            dephasing: Dephasing::default(),
            heating_rates: vec![0.0; mode_count],
            heating: Heating::default(),
            lifetime: None,
            crosstalk: 0.0,
            pointing_sigma: 0.0,
            initial_nbar: vec![0.0; mode_count],
        }
    }

    pub fn validate(&self, mode_count: usize) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if let Some(t2) = self.t2 {
            if !(t2 > 0.0 && t2.is_finite()) {
                return bad("t2 must be positive");
            }
        }
        if let Some(l) = self.lifetime {
            if !(l > 0.0 && l.is_finite()) {
                return bad("lifetime must be positive");
            }
        }
        if self.heating_rates.len() != mode_count || self.initial_nbar.len() != mode_count {
            return Err(Error::InvalidConfig(format!(
                "heating_rates and initial_nbar need one entry per mode ({mode_count})"
            )));
        }
        if self.heating_rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return bad("heating rates must be non-negative");
        }
        if self.initial_nbar.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return bad("initial_nbar must be non-negative");
        }
        if !(self.pointing_sigma >= 0.0 && self.pointing_sigma.is_finite()) {
            return bad("pointing_sigma must be non-negative");
        }
        if !self.crosstalk.is_finite() {
            return bad("crosstalk must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSettings {
    /// Fock cutoff of the mediator; `None` picks one from the expected occupation.
    pub fock: Option<usize>,
    /// Largest cutoff the adaptive doubling may reach.
    pub max_fock: usize,
    /// Number of back-to-back gates.
    pub repetitions: usize,
    /// Output samples per gate.
    pub samples_per_gate: usize,
    /// Further modes to keep as Fock spaces, with their cutoff.
    pub extra_modes: Vec<(usize, usize)>,
    pub tolerances: Tolerances,
    /// Per-ion multipliers on the drive, e.g. from beam pointing offsets.
    pub drive_scale: Option<Vec<f64>>,
}

impl Default for MasterSettings {
    fn default() -> Self {
        Self {
            fock: None,
            max_fock: 120,
            repetitions: 1,
            samples_per_gate: 24,
            extra_modes: vec![],
            tolerances: Tolerances::default(),
            drive_scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub fock: usize,
    pub hilbert_dim: usize,
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
    pub edge_population: f64,
    pub steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub time_grid: Vec<f64>,
    /// Driven ions, in the order used by `populations`.
    pub ions: Vec<usize>,
    /// Outcome probabilities per sample (leak reads as `0`), first ion most significant.
    pub populations: Vec<Vec<f64>>,
    /// Mean occupation of each explicit mode per sample.
    pub mode_occupation: Vec<Vec<f64>>,
    /// Explicit modes, mediator first.
    pub explicit_modes: Vec<usize>,
    /// Noiseless displacement `(re, im)` of each mode over one gate, pair spins `+1`.
    pub displacement: Vec<Vec<(f64, f64)>>,
    /// Pair phase accumulated by one gate.
    pub accumulated_phase: f64,
    /// Reduced ion state after each gate.
    pub gate_states: Vec<ReducedState>,
    /// Full density matrix at the end: dimensions and row-major entries `(re, im)`.
    pub final_dims: Vec<usize>,
    pub final_state: Vec<(f64, f64)>,
    pub diagnostics: Diagnostics,
}

impl SimResult {
    pub fn final_ions(&self) -> &ReducedState {
        self.gate_states.last().expect("at least one gate")
    }
}

/// Cutoff from the expected phonon number and the largest excursion of the loop.
pub fn default_fock(gate: &GateSpec, modes: &ModeSet, noise: &NoiseModel, repetitions: usize) -> usize {
    let m = gate.mediator;
    let total = gate.duration() * repetitions as f64;
    let nbar =
        noise.initial_nbar.get(m).copied().unwrap_or(0.0) + noise.heating_rates.get(m).copied().unwrap_or(0.0) * total;
    let times: Vec<f64> = (0..=64).map(|i| gate.duration() * i as f64 / 64.0).collect();
    let alpha = displacement_trajectory(gate, modes, &times)
        .map(|t| t.alpha[m].iter().map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max))
        .unwrap_or(0.0);
    15usize.max((8.0 * (nbar + 1.0) + 6.0 * alpha).ceil() as usize)
}

/// Runs the gate with adaptive Fock doubling on truncation errors.
pub fn evolve_master_equation(
    gate: &GateSpec,
    modes: &ModeSet,
    noise: &NoiseModel,
    settings: &MasterSettings,
) -> Result<SimResult> {
    gate.validate(modes)?;
    noise.validate(modes.len())?;
    if settings.repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    let mut fock = settings
        .fock
        .unwrap_or_else(|| default_fock(gate, modes, noise, settings.repetitions));
    loop {
        match evolve_fixed(gate, modes, noise, settings, fock)? {
            Err(_) if settings.fock.is_none() && 2 * fock <= settings.max_fock => fock *= 2,
            other => return other,
        }
    }
}

struct Term {
    op: SparseOp,
    kind: Coef,
}

enum Coef {
    /// `f(τ) e^{∓iδτ}` for an explicit mode's raising (`sign = −1`) or lowering part.
    Mode { delta: f64, sign: f64 },
    /// Spectator-phase rate for the ion pair `(a, b)` (positions in the coupling table).
    Ising { a: usize, b: usize },
}

enum Jump {
    Diagonal(Vec<C64>),
    General(SparseOp),
}

fn evolve_fixed(
    gate: &GateSpec,
    modes: &ModeSet,
    noise: &NoiseModel,
    settings: &MasterSettings,
    fock: usize,
) -> Result<Result<SimResult>> {
    let ions = gate.active_ions();
    let k = ions.len();
    let leak = noise.lifetime.is_some();
    let is_target = |j: usize| j == gate.pair.0 || j == gate.pair.1;
    let mut dims: Vec<usize> = ions.iter().map(|&j| if leak && is_target(j) { 3 } else { 2 }).collect();
    let mut explicit = vec![(gate.mediator, fock)];
    explicit.extend(
        settings
            .extra_modes
            .iter()
            .filter(|(m, _)| *m != gate.mediator)
            .copied(),
    );
    if explicit.iter().any(|(m, _)| *m >= modes.len()) {
        return Err(Error::InvalidArgument("explicit mode index out of range".into()));
    }
    dims.extend(explicit.iter().map(|(_, n)| *n));
    let space = Space::new(dims.clone());
    let n = space.total();
    if n > 4096 {
        return Err(Error::SizeGuard(format!("Hilbert space dimension {n} exceeds 4096")));
    }

    let mut c = gate.couplings(modes);
    if let Some(s) = &settings.drive_scale {
        if s.len() != c.len() {
            return Err(Error::InvalidArgument("drive_scale needs one entry per ion".into()));
        }
        for (row, f) in c.iter_mut().zip(s) {
            row.iter_mut().for_each(|x| *x *= f);
        }
    }
    let deltas = gate.detunings(modes);
    let segments = gate.envelope.segments();

    // Hamiltonian terms.
    let xs: Vec<_> = dims[..k].iter().map(|&d| ops::sigma_x(d)).collect();
    let mut terms = Vec::new();
    for (e, &(m, nm)) in explicit.iter().enumerate() {
        let up = ops::creation(nm);
        let mut plus = SparseOp::zero(n);
        for a in 0..k {
            let cm = c[ions[a]][m];
            if cm != 0.0 {
                plus = plus.add(&space.embed(&[(a, &xs[a]), (k + e, &up)]).scale(C64::new(cm, 0.0)));
            }
        }
        terms.push(Term {
            op: plus.adjoint(),
            kind: Coef::Mode {
                delta: deltas[m],
                sign: 1.0,
            },
        });
        terms.push(Term {
            op: plus,
            kind: Coef::Mode {
                delta: deltas[m],
                sign: -1.0,
            },
        });
    }
    let implicit: Vec<usize> = (0..modes.len())
        .filter(|m| explicit.iter().all(|(e, _)| e != m))
        .collect();
    for a in 0..k {
        for b in (a + 1)..k {
            if implicit.iter().any(|&m| c[ions[a]][m] * c[ions[b]][m] != 0.0) {
                terms.push(Term {
                    op: space.embed(&[(a, &xs[a]), (b, &xs[b])]),
                    kind: Coef::Ising { a: ions[a], b: ions[b] },
                });
            }
        }
    }

    // Dissipators.
    let mut lindblad: Vec<SparseOp> = Vec::new();
    let targets: Vec<usize> = (0..k).filter(|&a| is_target(ions[a])).collect();
    if let Some(t2) = noise.t2 {
        let g = (0.5 / t2).sqrt();
        let z: Vec<SparseOp> = targets
            .iter()
            .map(|&a| space.embed(&[(a, &ops::sigma_z(dims[a]))]))
            .collect();
        match noise.dephasing {
            Dephasing::Independent => lindblad.extend(z.into_iter().map(|op| op.scale(C64::new(g, 0.0)))),
            Dephasing::Correlated => {
                let sum = z.iter().skip(1).fold(z[0].clone(), |acc, op| acc.add(op));
                lindblad.push(sum.scale(C64::new(g, 0.0)));
            }
        }
    }
    for (e, &(m, nm)) in explicit.iter().enumerate() {
        let r = noise.heating_rates[m];
        if r > 0.0 {
            let s = C64::new(r.sqrt(), 0.0);
            lindblad.push(space.embed(&[(k + e, &ops::creation(nm))]).scale(s));
            if noise.heating == Heating::Symmetric {
                lindblad.push(space.embed(&[(k + e, &ops::annihilation(nm))]).scale(s));
            }
        }
    }
    if let Some(tau) = noise.lifetime {
        let s = C64::new((1.0 / tau).sqrt(), 0.0);
        for &a in &targets {
            lindblad.push(space.embed(&[(a, &ops::leak(dims[a]))]).scale(s));
        }
    }
    let decay = lindblad
        .iter()
        .fold(SparseOp::zero(n), |acc, l| acc.add(&l.adjoint().matmul(l)));
    let decay_diag = decay.diagonal();
    let jumps: Vec<Jump> = lindblad
        .into_iter()
        .map(|l| match l.diagonal() {
            Some(d) => Jump::Diagonal(d),
            None => Jump::General(l),
        })
        .collect();

    // Initial state: ions in |0⟩, explicit modes thermal.
    let mut rho = vec![ZERO; n * n];
    let mode_dist: Vec<Vec<f64>> = explicit
        .iter()
        .map(|&(m, nm)| thermal_distribution(noise.initial_nbar[m], nm))
        .collect();
    for idx in 0..n {
        let d = space.digits(idx);
        if d[..k].iter().any(|&x| x != 0) {
            continue;
        }
        let p: f64 = (0..explicit.len()).map(|e| mode_dist[e][d[k + e]]).product();
        rho[idx * n + idx] = C64::new(p, 0.0);
    }

    let period = gate.duration();
    let envelope = gate.envelope;
    let mut a_buf = vec![ZERO; n * n];
    let mut m_buf = vec![ZERO; n * n];
    let gate_start = std::cell::Cell::new(0.0);
    let mut rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let tau = t - gate_start.get();
        let f = envelope.value(tau);
        a_buf.iter_mut().for_each(|x| *x = ZERO);
        for term in &terms {
            let coef = match term.kind {
                Coef::Mode { delta, sign } => f * C64::from_polar(1.0, sign * delta * tau),
                Coef::Ising { a, b } => {
                    let mut rate = 0.0;
                    if f != 0.0 {
                        for &m in &implicit {
                            let cc = c[a][m] * c[b][m];
                            if cc != 0.0 {
                                let j = envelope_integral(&segments, deltas[m], tau);
                                rate += 2.0 * cc * f * (C64::from_polar(1.0, deltas[m] * tau) * j).im;
                            }
                        }
                    }
                    C64::new(rate, 0.0)
                }
            };
            if coef != ZERO {
                term.op.mul_dense_acc(y, &mut a_buf, C64::new(0.0, -1.0) * coef);
            }
        }
        match &decay_diag {
            Some(d) => {
                for r in 0..n {
                    let s = -0.5 * d[r];
                    if s != ZERO {
                        for (o, x) in a_buf[r * n..(r + 1) * n].iter_mut().zip(&y[r * n..(r + 1) * n]) {
                            *o += s * x;
                        }
                    }
                }
            }
            None => decay.mul_dense_acc(y, &mut a_buf, C64::new(-0.5, 0.0)),
        }
        for r in 0..n {
            for col in 0..n {
                dy[r * n + col] = a_buf[r * n + col] + a_buf[col * n + r].conj();
            }
        }
        for j in &jumps {
            match j {
                Jump::Diagonal(l) => {
                    for r in 0..n {
                        if l[r] == ZERO {
                            continue;
                        }
                        for col in 0..n {
                            dy[r * n + col] += l[r] * y[r * n + col] * l[col].conj();
                        }
                    }
                }
                Jump::General(l) => {
                    m_buf.iter_mut().for_each(|x| *x = ZERO);
                    l.mul_dense_acc(y, &mut m_buf, C64::new(1.0, 0.0));
                    l.dense_mul_adjoint_acc(&m_buf, dy);
                }
            }
        }
    };

    let mut solver = Dopri5::new(n * n, settings.tolerances);
    let breaks = envelope.breakpoints();
    let samples = settings.samples_per_gate.max(1);
    let mut stops: Vec<(f64, bool)> = breaks.iter().map(|&b| (b, false)).collect();
    stops.extend((1..=samples).map(|i| (period * i as f64 / samples as f64, true)));
    stops.sort_by(|x, y| x.0.total_cmp(&y.0));
    stops.dedup_by(|x, y| {
        if (x.0 - y.0).abs() < 1e-15 * period {
            y.1 |= x.1;
            true
        } else {
            false
        }
    });

    let outcome: Vec<usize> = (0..n)
        .map(|idx| {
            let d = space.digits(idx);
            d[..k].iter().fold(0, |acc, &x| (acc << 1) | usize::from(x == 1))
        })
        .collect();
    let ion_dim: usize = dims[..k].iter().product();
    let mode_dim = n / ion_dim;

    let mut time_grid = vec![0.0];
    let mut populations = Vec::new();
    let mut occupation = Vec::new();
    let mut max_trace_error: f64 = 0.0;
    let observe = |rho: &[C64], pops: &mut Vec<Vec<f64>>, occ: &mut Vec<Vec<f64>>| -> f64 {
        let mut p = vec![0.0; 1 << k];
        let mut nbar = vec![0.0; explicit.len()];
        let mut tr = 0.0;
        for idx in 0..n {
            let v = rho[idx * n + idx].re;
            tr += v;
            p[outcome[idx]] += v;
            let d = space.digits(idx);
            for e in 0..explicit.len() {
                nbar[e] += d[k + e] as f64 * v;
            }
        }
        pops.push(p);
        occ.push(nbar);
        (tr - 1.0).abs()
    };
    max_trace_error = max_trace_error.max(observe(&rho, &mut populations, &mut occupation));

    let mut gate_states = Vec::with_capacity(settings.repetitions);
    let mut edge_population: f64 = 0.0;
    for g in 0..settings.repetitions {
        let t0 = g as f64 * period;
        gate_start.set(t0);
        let mut last = 0.0;
        for &(s, record) in &stops {
            if s > last {
                solver.integrate(&mut rhs, t0 + last, t0 + s, &mut rho)?;
                last = s;
            }
            if record {
                time_grid.push(t0 + s);
                max_trace_error = max_trace_error.max(observe(&rho, &mut populations, &mut occupation));
            }
        }
        // Truncation guard: population in the top two levels of each explicit mode.
        let mut edge = vec![0.0; explicit.len()];
        for idx in 0..n {
            let d = space.digits(idx);
            for (e, &(_, nm)) in explicit.iter().enumerate() {
                if d[k + e] + 2 >= nm {
                    edge[e] += rho[idx * n + idx].re;
                }
            }
        }
        edge_population = edge.iter().copied().fold(edge_population, f64::max);
        for (e, &(_, nm)) in explicit.iter().enumerate().rev() {
            if edge[e] > 1e-6 {
                let err = Error::Truncation {
                    cutoff: nm,
                    edge_population: edge[e],
                };
                // Only the mediator cutoff is adapted; others are fixed by the caller.
                return if e == 0 { Ok(Err(err)) } else { Err(err) };
            }
        }
        let mut red = vec![ZERO; ion_dim * ion_dim];
        for a in 0..ion_dim {
            for b in 0..ion_dim {
                let mut acc = ZERO;
                for m in 0..mode_dim {
                    acc += rho[(a * mode_dim + m) * n + b * mode_dim + m];
                }
                red[a * ion_dim + b] = acc;
            }
        }
        gate_states.push(ReducedState {
            ions: ions.clone(),
            dims: dims[..k].to_vec(),
            rho: red,
        });
    }

    // A dense eigensolve beyond this size costs more than the evolution itself.
    let min_eigenvalue = if n <= 1024 {
        min_eigenvalue(&rho, n)
    } else {
        let last = gate_states.last().expect("at least one gate");
        min_eigenvalue(&last.rho, last.dim())
    };
    let times: Vec<f64> = (0..=samples).map(|i| period * i as f64 / samples as f64).collect();
    let traj = displacement_trajectory(gate, modes, &times)?;
    let accumulated_phase = *traj.theta.last().unwrap_or(&0.0);
    Ok(Ok(SimResult {
        time_grid,
        ions,
        populations,
        mode_occupation: occupation,
        explicit_modes: explicit.iter().map(|(m, _)| *m).collect(),
        displacement: traj.alpha,
        accumulated_phase,
        gate_states,
        final_dims: dims,
        final_state: rho.iter().map(|z| (z.re, z.im)).collect(),
        diagnostics: Diagnostics {
            fock,
            hilbert_dim: n,
            max_trace_error,
            min_eigenvalue,
            edge_population,
            steps: solver.steps,
            rejected_steps: solver.rejected,
            rhs_evaluations: solver.evaluations,
        },
    }))
}

/// Smallest eigenvalue of a Hermitian row-major matrix.
pub fn min_eigenvalue(rho: &[C64], n: usize) -> f64 {
    let m = nalgebra::DMatrix::from_fn(n, n, |r, c| 0.5 * (rho[r * n + c] + rho[c * n + r].conj()));
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{chain_and_modes, TrapConfig};
    use crate::constants::{khz, mhz};
    use crate::dynamics::envelope::PulseEnvelope;
    use crate::dynamics::trajectory::{analytic_gate_state, calibrate_gate};
    use std::f64::consts::PI;

    fn setup() -> (ModeSet, GateSpec) {
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
        (m, g)
    }

    fn max_diff(a: &ReducedState, b: &ReducedState) -> f64 {
        a.rho
            .iter()
            .zip(&b.rho)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    fn overlap(a: &ReducedState, b: &ReducedState) -> f64 {
        let d = a.dim();
        let mut s = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                s += a.get(i, j) * b.get(j, i);
            }
        }
        s.re
    }

    #[test]
    fn noiseless_matches_analytic_map() {
        let (m, g) = setup();
        let settings = MasterSettings {
            fock: Some(15),
            ..Default::default()
        };
        let r = evolve_master_equation(&g, &m, &NoiseModel::noiseless(3), &settings).unwrap();
        let me = r.final_ions();
        let an = analytic_gate_state(&g, &m, &[0.0; 3], 1).unwrap();
        assert!(max_diff(me, &an) < 1e-6, "{}", max_diff(me, &an));
        // Both states are pure to this precision, so tr(ρσ) is the state fidelity.
        assert!(overlap(me, &an) > 1.0 - 1e-6);
        assert!((me.purity() - 1.0).abs() < 1e-6);
        assert!(r.diagnostics.max_trace_error < 1e-8);
        assert!(r.diagnostics.min_eigenvalue > -1e-9, "{:?}", r.diagnostics);
        let p = me.measured_populations();
        let bell = 0.5 * (p[0] + p[3]) + me.get(0, 3).norm();
        assert!(bell > 0.9999, "{bell}");
    }

    #[test]
    fn explicit_spectators_agree_with_ising_rate() {
        let (m, g) = setup();
        let noise = NoiseModel::noiseless(3);
        let eff = evolve_master_equation(&g, &m, &noise, &MasterSettings::default()).unwrap();
        let full = MasterSettings {
            fock: Some(15),
            extra_modes: vec![(1, 4), (2, 4)],
            samples_per_gate: 4,
            ..Default::default()
        };
        let all = evolve_master_equation(&g, &m, &noise, &full).unwrap();
        assert_eq!(all.explicit_modes, vec![0, 1, 2]);
        let d = max_diff(eff.final_ions(), all.final_ions());
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn repeated_gates_and_determinism() {
        let (m, g) = setup();
        let noise = NoiseModel {
            t2: Some(3e-3),
            heating_rates: vec![250.0, 0.0, 0.0],
            lifetime: Some(53e-3),
            ..NoiseModel::noiseless(3)
        };
        let settings = MasterSettings {
            repetitions: 3,
            samples_per_gate: 6,
            ..Default::default()
        };
        let a = evolve_master_equation(&g, &m, &noise, &settings).unwrap();
        let b = evolve_master_equation(&g, &m, &noise, &settings).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.gate_states.len(), 3);
        assert_eq!(a.time_grid.len(), 19);
        assert!((a.time_grid[18] - 360e-6).abs() < 1e-15);
        assert!(a.diagnostics.max_trace_error < 1e-8);
        assert!(a.diagnostics.min_eigenvalue > -1e-9);
        for p in &a.populations {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-3);
            assert!(p.iter().all(|x| *x >= -1e-9));
        }
        // Heating raises the mediator occupation.
        let occ = &a.mode_occupation;
        assert!(occ.last().unwrap()[0] > 0.05);
        // Three π/4 gates give the ideal state rotated by 3π/4.
        let ideal = analytic_gate_state(&g, &m, &[0.0; 3], 3).unwrap();
        let o = overlap(&a.final_ions().qubit_block(), &ideal);
        assert!(o > 0.9 && o < 0.99, "{o}");
    }

    #[test]
    fn truncation_guard_and_size_guard() {
        let (m, g) = setup();
        let hot = NoiseModel {
            initial_nbar: vec![2.0, 0.0, 0.0],
            ..NoiseModel::noiseless(3)
        };
        let fixed = MasterSettings {
            fock: Some(6),
            samples_per_gate: 2,
            ..Default::default()
        };
        assert!(matches!(
            evolve_master_equation(&g, &m, &hot, &fixed),
            Err(Error::Truncation { cutoff: 6, .. })
        ));
        let big = MasterSettings {
            fock: Some(40),
            extra_modes: vec![(1, 40), (2, 40)],
            ..Default::default()
        };
        assert!(matches!(
            evolve_master_equation(&g, &m, &hot, &big),
            Err(Error::SizeGuard(_))
        ));
        let auto = evolve_master_equation(
            &g,
            &m,
            &hot,
            &MasterSettings {
                samples_per_gate: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(auto.diagnostics.edge_population <= 1e-6);
        assert!(auto.diagnostics.fock >= 30);
    }

    #[test]
    fn sdf_single_ion_matches_formula() {
        let m = chain_and_modes(&TrapConfig::ytterbium(1, mhz(0.402))).unwrap().1;
        let d = khz(10.0);
        let env = PulseEnvelope::sin2(120e-6, 20e-6);
        let g = GateSpec {
            pair: (0, 0),
            mediator: 0,
            detuning: d,
            envelope: env,
            target_phase: PI / 4.0,
            drive: vec![khz(2.5)],
        };
        let settings = MasterSettings {
            fock: Some(15),
            samples_per_gate: 12,
            ..Default::default()
        };
        let r = evolve_master_equation(&g, &m, &NoiseModel::noiseless(1), &settings).unwrap();
        let want = crate::dynamics::single_ion::detuned_sdf_oscillation(khz(2.5), d, &env, 0.0, &r.time_grid).unwrap();
        for (p, w) in r.populations.iter().zip(&want) {
            assert!((p[1] - w).abs() < 1e-3, "{} {}", p[1], w);
        }
    }
}
