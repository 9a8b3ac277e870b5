//! Weak-probe excitation spectrum of one addressed ion.

use serde::{Deserialize, Serialize};

use super::single_ion::{transition_rabi, Transition};
use super::state::thermal_distribution;
use crate::chain::ModeSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumProbe {
    /// Probe detunings from the qubit frequency, rad/s.
    pub detunings: Vec<f64>,
    /// Probe duration, s.
    pub tau: f64,
    /// Thermal occupation per mode.
    pub nbar: Vec<f64>,
    /// Phonon levels summed per line.
    pub fock: usize,
}

fn line(omega: f64, offset: f64, tau: f64) -> f64 {
    if omega == 0.0 {
        return 0.0;
    }
    let g2 = omega * omega + offset * offset;
    omega * omega / g2 * (0.5 * g2.sqrt() * tau).sin().powi(2)
}

/// `P₁` versus probe detuning for an ion with carrier Rabi frequency `carrier` and
/// first-order sideband Rabi frequencies `sideband[m] = η_m Ω` on each mode.
///
/// Each resolved line is a thermally averaged Rabi lineshape; lines are summed and clipped to 1.
pub fn simulate_spectrum(modes: &ModeSet, carrier: f64, sideband: &[f64], probe: &SpectrumProbe) -> Vec<f64> {
    let dists: Vec<Vec<f64>> = probe
        .nbar
        .iter()
        .map(|n| thermal_distribution(*n, probe.fock))
        .collect();
    probe
        .detunings
        .iter()
        .map(|&d| {
            let mut p = line(carrier, d, probe.tau);
            for (m, nu) in modes.frequencies.iter().enumerate() {
                let s = sideband.get(m).copied().unwrap_or(0.0);
                if s == 0.0 {
                    continue;
                }
                for (n, pn) in dists[m].iter().enumerate() {
                    let blue = transition_rabi(Transition::Blue, 1.0, s, n);
                    let red = transition_rabi(Transition::Red, 1.0, s, n);
                    p += pn * (line(blue, d - nu, probe.tau) + line(red, d + nu, probe.tau));
                }
            }
            p.min(1.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{chain_and_modes, TrapConfig};
    use crate::constants::mhz;
    use std::f64::consts::PI;

    #[test]
    fn sidebands_only_for_gradient_coupling() {
        let (_, modes) = chain_and_modes(&TrapConfig::ytterbium(3, mhz(0.402))).unwrap();
        let w = 2.0 * PI * 5e3;
        let tau = PI / w;
        let dets: Vec<f64> = modes.frequencies.iter().flat_map(|f| [*f, -*f]).chain([0.0]).collect();
        let probe = SpectrumProbe {
            detunings: dets,
            tau,
            nbar: vec![0.0; 3],
            fock: 10,
        };
        let p = simulate_spectrum(&modes, 0.0, &[w, w, w], &probe);
        for m in 0..3 {
            assert!(p[2 * m] > 0.99, "blue {m}: {}", p[2 * m]);
            assert!(p[2 * m + 1] < 1e-3, "red {m}: {}", p[2 * m + 1]);
        }
        assert!(p[6] < 1e-3);
        let flat = simulate_spectrum(&modes, 0.0, &[0.0; 3], &probe);
        assert!(flat.iter().all(|x| *x == 0.0));
    }
}
