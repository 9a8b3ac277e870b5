use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::envelope::PulseEnvelope;
use crate::chain::ModeSet;
use crate::error::{Error, Result};

/// Bichromatic gate drive on a chain.
///
/// `drive[j]` is the state-dependent-force amplitude on ion `j` in rad/s, quoted as the
/// coupling it produces on the mediator mode when ion `j` moves like `pair.0`.
/// Ions other than the pair carry crosstalk drive only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub pair: (usize, usize),
    pub mediator: usize,
    /// Beat-note detuning from the mediator mode, rad/s.
    pub detuning: f64,
    pub envelope: PulseEnvelope,
    /// Target XX rotation angle in rad.
    pub target_phase: f64,
    pub drive: Vec<f64>,
}

impl GateSpec {
    /// Gate on `pair` with equal drive magnitudes, signed so the accumulated phase
    /// has the sign of `target_phase`.
    pub fn new(
        modes: &ModeSet,
        pair: (usize, usize),
        mediator: usize,
        detuning: f64,
        envelope: PulseEnvelope,
        target_phase: f64,
        omega: f64,
    ) -> Result<Self> {
        let n = modes.eigenvectors.len();
        if pair.0 == pair.1 || pair.0 >= n || pair.1 >= n {
            return Err(Error::InvalidArgument(format!(
                "ion pair {pair:?} invalid for a {n}-ion chain"
            )));
        }
        if mediator >= modes.len() {
            return Err(Error::InvalidArgument(format!("mediator mode {mediator} out of range")));
        }
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::InvalidArgument(format!("drive amplitude {omega} invalid")));
        }
        let (bj, bk) = (modes.b(pair.0, mediator), modes.b(pair.1, mediator));
        if bj.abs() < 1e-9 || bk.abs() < 1e-9 {
            return Err(Error::DegenerateGate);
        }
        let mut drive = vec![0.0; n];
        drive[pair.0] = omega;
        drive[pair.1] = omega * (bj * bk * detuning * target_phase).signum();
        let gate = Self {
            pair,
            mediator,
            detuning,
            envelope,
            target_phase,
            drive,
        };
        gate.validate(modes)?;
        Ok(gate)
    }

    pub fn validate(&self, modes: &ModeSet) -> Result<()> {
        self.envelope.validate()?;
        if self.drive.len() != modes.eigenvectors.len() {
            return Err(Error::InvalidArgument(
                "drive vector length differs from ion count".into(),
            ));
        }
        if self.detuning == 0.0 || !self.detuning.is_finite() {
            return Err(Error::InvalidConfig("gate detuning must be nonzero".into()));
        }
        if !(self.target_phase > -PI && self.target_phase <= PI) || self.target_phase == 0.0 {
            return Err(Error::InvalidConfig(format!(
                "target phase {} must be nonzero and within (-π, π]",
                self.target_phase
            )));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.envelope.duration
    }

    /// Ions with nonzero drive, ascending.
    pub fn active_ions(&self) -> Vec<usize> {
        (0..self.drive.len()).filter(|&j| self.drive[j] != 0.0).collect()
    }

    /// Nearest neighbours of the pair that are not themselves targets.
    pub fn spectators(&self) -> Vec<usize> {
        let n = self.drive.len();
        let (a, b) = self.pair;
        let mut s: Vec<usize> = [a.wrapping_sub(1), a + 1, b.wrapping_sub(1), b + 1]
            .into_iter()
            .filter(|&j| j < n && j != a && j != b)
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Adds crosstalk drive on nearest-neighbour spectators.
    ///
    /// Each spectator receives `fraction` times the mean drive of the adjacent targets,
    /// so `fraction` is the total relative force a neighbour feels.
    pub fn with_crosstalk(&self, fraction: f64) -> Self {
        let mut g = self.clone();
        let (a, b) = self.pair;
        for s in self.spectators() {
            let near: Vec<f64> = [a, b]
                .into_iter()
                .filter(|&t| t.abs_diff(s) == 1)
                .map(|t| self.drive[t])
                .collect();
            g.drive[s] = fraction * near.iter().sum::<f64>() / near.len() as f64;
        }
        g
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut g = self.clone();
        g.drive.iter_mut().for_each(|d| *d *= factor);
        g
    }

    /// Laser beat-note frequency `μ = ν_med + δ`.
    pub fn beat_note(&self, modes: &ModeSet) -> f64 {
        modes.frequencies[self.mediator] + self.detuning
    }

    /// Per-mode detunings `δ_m = μ − ν_m`.
    pub fn detunings(&self, modes: &ModeSet) -> Vec<f64> {
        let mu = self.beat_note(modes);
        modes.frequencies.iter().map(|nu| mu - nu).collect()
    }

    /// `C[j][m] = drive_j · b[j][m] / |b[pair.0][med]| · sqrt(ν_med / ν_m)`, rad/s.
    pub fn couplings(&self, modes: &ModeSet) -> Vec<Vec<f64>> {
        let bref = modes.b(self.pair.0, self.mediator).abs();
        let nu_med = modes.frequencies[self.mediator];
        (0..self.drive.len())
            .map(|j| {
                (0..modes.len())
                    .map(|m| self.drive[j] * modes.b(j, m) / bref * (nu_med / modes.frequencies[m]).sqrt())
                    .collect()
            })
            .collect()
    }
}
