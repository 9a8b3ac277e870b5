//! Closed-form single-ion dynamics: resonant and detuned state-dependent force, Rabi flops.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::envelope::{envelope_integral, PulseEnvelope};
use super::state::thermal_distribution;
use crate::error::{Error, Result};

/// `P₁ = [1 − exp(−2Ω²τ²)]/2` for a resonant force on a ground-state ion starting in `|0⟩`.
pub fn sdf_population(omega_sdf: f64, tau: f64) -> f64 {
    0.5 * (1.0 - (-2.0 * (omega_sdf * tau).powi(2)).exp())
}

/// `P₁(t)` under a detuned force with envelope, from a thermal state of occupation `nbar`.
///
/// The spin-up and spin-down wavepackets are displaced by `±α(t)` with
/// `α = −iΩ J(t)`, giving `P₁ = [1 − exp(−2|α|²(2n̄+1))]/2`.
pub fn detuned_sdf_oscillation(
    omega_sdf: f64,
    detuning: f64,
    envelope: &PulseEnvelope,
    nbar: f64,
    times: &[f64],
) -> Result<Vec<f64>> {
    envelope.validate()?;
    let segs = envelope.segments();
    Ok(times
        .iter()
        .map(|&t| {
            let alpha = C64::new(0.0, -omega_sdf) * envelope_integral(&segs, detuning, t);
            0.5 * (1.0 - (-2.0 * alpha.norm_sqr() * (2.0 * nbar + 1.0)).exp())
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    Carrier,
    Red,
    Blue,
}

/// Generalized Laguerre polynomial `L_n^{(a)}(x)`.
pub fn laguerre(n: usize, a: usize, x: f64) -> f64 {
    let (mut l0, mut l1) = (1.0, 1.0 + a as f64 - x);
    if n == 0 {
        return l0;
    }
    for k in 1..n {
        let k = k as f64;
        let l2 = ((2.0 * k + 1.0 + a as f64 - x) * l1 - (k + a as f64) * l0) / (k + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// Rabi frequency of `|n⟩ → |n'⟩` for the given transition, to all orders in `η`
/// for the carrier and to leading order on the sidebands.
pub fn transition_rabi(transition: Transition, eta: f64, omega: f64, n: usize) -> f64 {
    match transition {
        Transition::Carrier => omega * (-0.5 * eta * eta).exp() * laguerre(n, 0, eta * eta),
        Transition::Blue => omega * eta * ((n + 1) as f64).sqrt(),
        Transition::Red => omega * eta * (n as f64).sqrt(),
    }
}

/// Thermal-mixture Rabi flop `Σ p_n sin²(Ω_n t / 2)` from `|0⟩`.
///
/// `fock` is the number of phonon levels summed; it must be at least `10(n̄ + 1)`.
pub fn sideband_rabi(
    transition: Transition,
    eta: f64,
    omega_carrier: f64,
    nbar: f64,
    fock: usize,
    times: &[f64],
) -> Result<Vec<f64>> {
    let needed = (10.0 * (nbar + 1.0)).ceil() as usize;
    if fock < needed {
        return Err(Error::Truncation {
            cutoff: fock,
            edge_population: thermal_distribution(nbar, fock + 1)[fock],
        });
    }
    let p = thermal_distribution(nbar, fock);
    let rabi: Vec<f64> = (0..fock)
        .map(|n| transition_rabi(transition, eta, omega_carrier, n))
        .collect();
    Ok(times
        .iter()
        .map(|&t| {
            p.iter()
                .zip(&rabi)
                .map(|(pn, w)| pn * (0.5 * w * t).sin().powi(2))
                .sum()
        })
        .collect())
}
