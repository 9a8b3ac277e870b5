//! Closed-form phase-space analytics of the state-dependent force.
//!
//! With `H = Σ_{j,m} C_jm f(t) X_j (a_m† e^{−iδ_m t} + a_m e^{iδ_m t})` the propagator is
//! `Π_m D(Σ_j α_jm X_j) · exp(−i Σ_{j<k} Θ_jk X_j X_k)` with
//! `α_jm(t) = −i C_jm J_m(t)`, `J_m(t) = ∫₀ᵗ f e^{−iδ_m t'} dt'` and
//! `Θ_jk(t) = 2 Σ_m C_jm C_km K_m(t)`, `K_m(t) = ∫₀ᵗ f(t₁) Im(e^{iδ_m t₁} J_m(t₁)) dt₁`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::envelope::{envelope_integral, Segment};
use super::gate::GateSpec;
use super::quad::{gauss_legendre, integrate};
use super::state::ReducedState;
use crate::chain::ModeSet;
use crate::error::{Error, Result};

const GL_ORDER: usize = 20;

/// `K(b) − K(a)` for one mode.
pub fn phase_integral(segments: &[Segment], delta: f64, a: f64, b: f64) -> f64 {
    let rule = gauss_legendre(GL_ORDER);
    let mut total = 0.0;
    for s in segments {
        let (lo, hi) = (a.max(s.start), b.min(s.end));
        if hi <= lo {
            continue;
        }
        let fastest = delta.abs() + s.terms.iter().fold(0.0f64, |m, (_, w)| m.max(w.abs()));
        let panels = ((hi - lo) * fastest / std::f64::consts::PI).ceil().max(1.0) as usize;
        total += integrate(&rule, lo, hi, panels, |t| {
            let f: f64 = s.terms.iter().map(|(c, w)| (c * C64::from_polar(1.0, w * t)).re).sum();
            let j = envelope_integral(segments, delta, t);
            f * (C64::from_polar(1.0, delta * t) * j).im
        });
    }
    total
}

/// Mode integrals at the end of the pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeIntegrals {
    pub detunings: Vec<f64>,
    pub j: Vec<C64>,
    pub k: Vec<f64>,
}

pub fn mode_integrals(gate: &GateSpec, modes: &ModeSet) -> ModeIntegrals {
    let segs = gate.envelope.segments();
    let t = gate.duration();
    let detunings = gate.detunings(modes);
    let j = detunings.iter().map(|d| envelope_integral(&segs, *d, t)).collect();
    let k = detunings.iter().map(|d| phase_integral(&segs, *d, 0.0, t)).collect();
    ModeIntegrals { detunings, j, k }
}

/// Geometric phase matrix `Θ_jk` at the end of one pulse.
pub fn phase_matrix(gate: &GateSpec, modes: &ModeSet) -> Vec<Vec<f64>> {
    phase_matrix_from(&gate.couplings(modes), &mode_integrals(gate, modes).k)
}

fn phase_matrix_from(c: &[Vec<f64>], k: &[f64]) -> Vec<Vec<f64>> {
    let n = c.len();
    let mut theta = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                theta[a][b] = 2.0 * (0..k.len()).map(|m| c[a][m] * c[b][m] * k[m]).sum::<f64>();
            }
        }
    }
    theta
}

/// Accumulated phase on the gate pair.
pub fn pair_phase(gate: &GateSpec, modes: &ModeSet) -> f64 {
    phase_matrix(gate, modes)[gate.pair.0][gate.pair.1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `alpha[m][i]`: displacement of mode `m` at `times[i]` with both pair spins `+1`,
    /// stored as `(re, im)`.
    pub alpha: Vec<Vec<(f64, f64)>>,
    /// Pair phase `Θ(t)`.
    pub theta: Vec<f64>,
}

impl Trajectory {
    /// Largest final displacement over modes.
    pub fn residual(&self) -> f64 {
        self.alpha
            .iter()
            .filter_map(|a| a.last())
            .map(|(re, im)| re.hypot(*im))
            .fold(0.0, f64::max)
    }
}

/// Displacements and pair phase sampled at `times`, which must be ascending.
pub fn displacement_trajectory(gate: &GateSpec, modes: &ModeSet, times: &[f64]) -> Result<Trajectory> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("trajectory times must be ascending".into()));
    }
    let segs = gate.envelope.segments();
    let c = gate.couplings(modes);
    let deltas = gate.detunings(modes);
    let (p, q) = gate.pair;
    let mut alpha = vec![Vec::with_capacity(times.len()); modes.len()];
    let mut theta = Vec::with_capacity(times.len());
    let mut k_acc = vec![0.0; modes.len()];
    let mut last = 0.0f64;
    for &t in times {
        let mut th = 0.0;
        for (m, &d) in deltas.iter().enumerate() {
            let j = envelope_integral(&segs, d, t);
            let a = C64::new(0.0, -1.0) * (c[p][m] + c[q][m]) * j;
            alpha[m].push((a.re, a.im));
            k_acc[m] += phase_integral(&segs, d, last.max(0.0), t.max(0.0));
            th += 2.0 * c[p][m] * c[q][m] * k_acc[m];
        }
        last = t;
        theta.push(th);
    }
    Ok(Trajectory {
        times: times.to_vec(),
        alpha,
        theta,
    })
}

/// Rescales all drive amplitudes so the pair phase equals the target phase.
pub fn calibrate_gate(gate: &GateSpec, modes: &ModeSet) -> Result<GateSpec> {
    let theta = pair_phase(gate, modes);
    if theta == 0.0 || !theta.is_finite() || theta.signum() != gate.target_phase.signum() {
        return Err(Error::DegenerateGate);
    }
    Ok(gate.scaled((gate.target_phase / theta).sqrt()))
}

/// In-place Walsh–Hadamard transform on index bits, normalized.
fn hadamard_all(v: &mut [C64], stride: usize, count: usize) {
    let mut h = 1;
    while h < count {
        for i in (0..count).step_by(2 * h) {
            for j in i..i + h {
                let a = v[j * stride];
                let b = v[(j + h) * stride];
                v[j * stride] = a + b;
                v[(j + h) * stride] = a - b;
            }
        }
        h *= 2;
    }
    let s = 1.0 / (count as f64).sqrt();
    for i in 0..count {
        v[i * stride] *= s;
    }
}

/// Reduced spin state of the driven ions after `repetitions` pulses from `|0…0⟩`,
/// with each mode initially thermal at `nbar[m]`.
pub fn analytic_gate_state(gate: &GateSpec, modes: &ModeSet, nbar: &[f64], repetitions: usize) -> Result<ReducedState> {
    analytic_state_with(gate, modes, nbar, repetitions, None)
}

/// As [`analytic_gate_state`] with the drive on each ion multiplied by `scale[j]`.
pub fn analytic_state_with(
    gate: &GateSpec,
    modes: &ModeSet,
    nbar: &[f64],
    repetitions: usize,
    scale: Option<&[f64]>,
) -> Result<ReducedState> {
    analytic_state_masked(gate, modes, nbar, repetitions, scale, None)
}

/// As [`analytic_state_with`], keeping the residual displacement only of modes with
/// `displaced[m]`; the geometric phase of every mode is retained.
pub fn analytic_state_masked(
    gate: &GateSpec,
    modes: &ModeSet,
    nbar: &[f64],
    repetitions: usize,
    scale: Option<&[f64]>,
    displaced: Option<&[bool]>,
) -> Result<ReducedState> {
    if nbar.len() != modes.len() || displaced.is_some_and(|d| d.len() != modes.len()) {
        return Err(Error::InvalidArgument(format!(
            "{} thermal occupations for {} modes",
            nbar.len(),
            modes.len()
        )));
    }
    if scale.is_some_and(|s| s.len() != gate.drive.len()) {
        return Err(Error::InvalidArgument("drive scale needs one entry per ion".into()));
    }
    let ions = gate.active_ions();
    let k = ions.len();
    if k > 12 {
        return Err(Error::SizeGuard(format!("{k} driven ions")));
    }
    let ints = mode_integrals(gate, modes);
    let mut c = gate.couplings(modes);
    if let Some(s) = scale {
        for (row, f) in c.iter_mut().zip(s) {
            row.iter_mut().for_each(|x| *x *= f);
        }
    }
    let theta = phase_matrix_from(&c, &ints.k);
    let n = repetitions as f64;
    let dim = 1usize << k;

    // Spin eigenvalues: bit 0 -> +1, bit 1 -> −1, first ion most significant.
    let spins = |s: usize| -> Vec<f64> {
        (0..k)
            .map(|a| if (s >> (k - 1 - a)) & 1 == 0 { 1.0 } else { -1.0 })
            .collect()
    };
    let mut phi = vec![0.0; dim];
    let mut beta = vec![vec![C64::new(0.0, 0.0); modes.len()]; dim];
    for s in 0..dim {
        let sp = spins(s);
        for a in 0..k {
            for b in (a + 1)..k {
                phi[s] += theta[ions[a]][ions[b]] * sp[a] * sp[b];
            }
        }
        for m in 0..modes.len() {
            if displaced.is_some_and(|d| !d[m]) {
                continue;
            }
            let sum: f64 = (0..k).map(|a| sp[a] * c[ions[a]][m]).sum();
            beta[s][m] = C64::new(0.0, -1.0) * sum * ints.j[m] * n;
        }
    }
    let mut rho = vec![C64::new(0.0, 0.0); dim * dim];
    let p0 = 1.0 / dim as f64;
    for s in 0..dim {
        for t in 0..dim {
            let mut expo = C64::new(0.0, -n * (phi[s] - phi[t]));
            for m in 0..modes.len() {
                let (b, bp) = (beta[s][m], beta[t][m]);
                expo += C64::new(-(b - bp).norm_sqr() * (nbar[m] + 0.5), (bp.conj() * b).im);
            }
            rho[s * dim + t] = p0 * expo.exp();
        }
    }
    for r in 0..dim {
        hadamard_all(&mut rho[r * dim..], 1, dim);
    }
    for col in 0..dim {
        hadamard_all(&mut rho[col..], dim, dim);
    }
    Ok(ReducedState {
        ions,
        dims: vec![2; k],
        rho,
    })
}

/// `exp(−i φ X X)^n |00⟩` for the gate pair.
pub fn ideal_pair_state(gate: &GateSpec, repetitions: usize) -> ReducedState {
    let a = gate.target_phase * repetitions as f64;
    let psi = [
        C64::new(a.cos(), 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, -a.sin()),
    ];
    ReducedState::pure(vec![gate.pair.0, gate.pair.1], &psi)
}
