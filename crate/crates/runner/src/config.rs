//! Scenario files: TOML with unit-suffixed keys.
//!
//! Frequencies are quoted as `f` in `2π × f` (MHz or kHz), times in μs or ms,
//! lengths in μm or nm and heating rates in quanta/s.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use hgsim_core::chain::{ModeSet, TrapConfig};
use hgsim_core::constants::{khz, mhz, ATOMIC_MASS_UNIT};
use hgsim_core::dynamics::integrator::Tolerances;
use hgsim_core::dynamics::{Dephasing, GateSpec, Heating, MasterSettings, NoiseModel, PulseEnvelope, Shape};
use hgsim_core::optics::{BeamKind, BeamProfile};

use crate::error::{Context, Result, RunnerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Modes,
    BeamProfile,
    Spectrum,
    SdfSingle,
    Gate,
    Bell,
    RepeatGates,
    ChainSweep,
    Budget,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Modes,
        Kind::BeamProfile,
        Kind::Spectrum,
        Kind::SdfSingle,
        Kind::Gate,
        Kind::Bell,
        Kind::RepeatGates,
        Kind::ChainSweep,
        Kind::Budget,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Modes => "modes",
            Kind::BeamProfile => "beam_profile",
            Kind::Spectrum => "spectrum",
            Kind::SdfSingle => "sdf_single",
            Kind::Gate => "gate",
            Kind::Bell => "bell",
            Kind::RepeatGates => "repeat_gates",
            Kind::ChainSweep => "chain_sweep",
            Kind::Budget => "budget",
        }
    }

    /// CLI subcommand that runs this kind.
    pub fn command(self) -> &'static str {
        match self {
            Kind::BeamProfile => "beam",
            Kind::SdfSingle => "sdf",
            Kind::RepeatGates => "repeat",
            Kind::ChainSweep => "sweep",
            k => k.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Density-matrix evolution with every configured noise channel.
    #[default]
    Master,
    /// Closed-form phase-space map; noise other than the initial occupation is ignored.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam: Option<BeamSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdf: Option<SdfSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bell: Option<BellSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat: Option<RepeatSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub ion_count: usize,
    pub axial_mhz: f64,
    /// Ion mass in atomic mass units; 171Yb+ when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_u: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub kind: BeamKind,
    pub waist_um: f64,
    /// Beam centre relative to the addressed ion.
    #[serde(default)]
    pub offset_um: f64,
    /// Carrier Rabi frequency at the amplitude maximum.
    #[serde(default)]
    pub carrier_khz: f64,
    /// State-dependent-force Rabi frequency at the dark slit, pinned directly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdf_khz: Option<f64>,
}

fn default_phase() -> f64 {
    0.25
}

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

fn default_shape() -> Shape {
    Shape::Sin2Ramps
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    pub pair: [usize; 2],
    /// Mode index in ascending frequency: 0 is COM, 1 the next (breathing) mode.
    pub mediator: usize,
    pub detuning_khz: f64,
    pub duration_us: f64,
    #[serde(default)]
    pub ramp_us: f64,
    #[serde(default = "default_shape")]
    pub shape: Shape,
    /// Target XX rotation in units of π.
    #[serde(default = "default_phase")]
    pub target_phase_pi: f64,
    /// Peak drive per target before calibration.
    pub drive_khz: f64,
    #[serde(default = "default_true")]
    pub calibrate: bool,
    #[serde(default = "default_one")]
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_ms: Option<f64>,
    #[serde(default)]
    pub dephasing: Dephasing,
    /// Per mode, ascending frequency. Missing entries are zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub heating_per_s: Vec<f64>,
    #[serde(default)]
    pub heating: Heating,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime_ms: Option<f64>,
    #[serde(default)]
    pub crosstalk_fraction: f64,
    #[serde(default)]
    pub pointing_nm: f64,
    /// Per mode. Missing entries are zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_nbar: Vec<f64>,
}

fn default_max_fock() -> usize {
    120
}

fn default_samples() -> usize {
    24
}

fn default_rtol() -> f64 {
    1e-9
}

fn default_atol() -> f64 {
    1e-11
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub method: Method,
    /// Mediator Fock cutoff; chosen from the expected occupation when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock: Option<usize>,
    #[serde(default = "default_max_fock")]
    pub max_fock: usize,
    #[serde(default = "default_samples")]
    pub samples_per_gate: usize,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            method: Method::default(),
            fock: None,
            max_fock: default_max_fock(),
            samples_per_gate: default_samples(),
            rtol: default_rtol(),
            atol: default_atol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub z_min_um: f64,
    pub z_max_um: f64,
    pub points: usize,
    /// Neighbour distance for the crosstalk figure; the chain's nearest spacing when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_um: Option<f64>,
}

fn default_spectrum_fock() -> usize {
    30
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub ion: usize,
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub points: usize,
    pub probe_us: f64,
    #[serde(default = "default_spectrum_fock")]
    pub fock: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SdfSection {
    /// Carrier and force coupling versus beam offset, with the excitation after `probe_us`.
    Profile {
        offset_min_um: f64,
        offset_max_um: f64,
        points: usize,
        probe_us: f64,
    },
    /// Excitation after pulses of increasing length under a detuned force.
    Detuned {
        detuning_khz: f64,
        drive_khz: f64,
        #[serde(default)]
        ramp_us: f64,
        #[serde(default = "default_shape")]
        shape: Shape,
        #[serde(default)]
        nbar: f64,
        stop_us: f64,
        points: usize,
    },
    /// Blue-sideband flop, optionally shot-sampled, fitted for phonon number and Rabi rate.
    Thermometry {
        bsb_khz: f64,
        nbar: f64,
        stop_us: f64,
        points: usize,
        #[serde(default)]
        shots: u64,
        #[serde(default = "default_spectrum_fock")]
        fock: usize,
    },
}

fn default_fidelity() -> f64 {
    1.0
}

fn default_detection_shots() -> u64 {
    15_000
}

fn default_phases() -> usize {
    24
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellSection {
    #[serde(default = "default_fidelity")]
    pub f_bright: f64,
    #[serde(default = "default_fidelity")]
    pub f_dark: f64,
    /// Repetitions per setting; 0 uses exact probabilities.
    #[serde(default = "default_detection_shots")]
    pub shots: u64,
    /// Undo detection errors by constrained least squares.
    #[serde(default = "default_true")]
    pub correct: bool,
    #[serde(default = "default_phases")]
    pub phases: usize,
}

fn default_max_gates() -> usize {
    11
}

fn default_parity_pairs() -> Vec<[usize; 2]> {
    vec![[0, 1], [1, 2], [0, 2]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepeatSection {
    #[serde(default = "default_max_gates")]
    pub max_gates: usize,
    #[serde(default = "default_parity_pairs")]
    pub parity_pairs: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGate {
    pub label: String,
    pub mediator: usize,
    pub detuning_khz: f64,
    pub duration_us: f64,
    #[serde(default)]
    pub ramp_us: f64,
    #[serde(default = "default_shape")]
    pub shape: Shape,
    #[serde(default = "default_phase")]
    pub target_phase_pi: f64,
    pub drive_khz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub ion_count: usize,
    pub axial_mhz: f64,
    /// Per mode; missing entries are zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub heating_per_s: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_nbar: Vec<f64>,
    /// Reference fidelity per gate label.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub measured: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub gates: Vec<SweepGate>,
    pub points: Vec<SweepPoint>,
}

fn default_counts() -> Vec<usize> {
    vec![1, 3, 5, 7, 9, 11]
}

fn default_pointing_shots() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    #[serde(default = "default_counts")]
    pub gate_counts: Vec<usize>,
    #[serde(default = "default_pointing_shots")]
    pub pointing_shots: usize,
    /// Measured per-gate error for comparison.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experimental: Option<f64>,
    /// Reference value per source name, echoed beside the simulated entries.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub reference: BTreeMap<String, f64>,
}

/// Reads and validates a scenario file.
pub fn parse_config(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| RunnerError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<Scenario> {
    let s: Scenario = toml::from_str(text).map_err(|e| RunnerError::Syntax(e.to_string()))?;
    s.validate()?;
    Ok(s)
}

/// Canonical TOML form: defaults filled in, keys in declaration order.
pub fn to_toml(s: &Scenario) -> Result<String> {
    toml::to_string(s).map_err(|e| RunnerError::Serialize(e.to_string()))
}

struct Checks(Vec<String>);

impl Checks {
    fn positive(&mut self, field: &str, x: f64) {
        if !(x > 0.0 && x.is_finite()) {
            self.0.push(format!("{field}: must be positive, got {x}"));
        }
    }

    fn non_negative(&mut self, field: &str, x: f64) {
        if !(x >= 0.0 && x.is_finite()) {
            self.0.push(format!("{field}: must be non-negative, got {x}"));
        }
    }

    fn finite(&mut self, field: &str, x: f64) {
        if !x.is_finite() {
            self.0.push(format!("{field}: must be finite, got {x}"));
        }
    }

    fn at_least(&mut self, field: &str, x: usize, min: usize) {
        if x < min {
            self.0.push(format!("{field}: must be at least {min}, got {x}"));
        }
    }

    fn list(&mut self, field: &str, xs: &[f64], len: Option<usize>) {
        for (i, x) in xs.iter().enumerate() {
            self.non_negative(&format!("{field}[{i}]"), *x);
        }
        if let Some(n) = len {
            if xs.len() > n {
                self.0.push(format!("{field}: {} entries for {n} modes", xs.len()));
            }
        }
    }

    fn require<T>(&mut self, kind: Kind, section: &str, x: &Option<T>) {
        if x.is_none() {
            self.0.push(format!("[{section}]: required for kind {}", kind.name()));
        }
    }

    fn trap(&mut self, t: &TrapSection) {
        self.at_least("trap.ion_count", t.ion_count, 1);
        self.positive("trap.axial_mhz", t.axial_mhz);
        if let Some(m) = t.mass_u {
            self.positive("trap.mass_u", m);
        }
    }

    fn beam(&mut self, b: &BeamSection) {
        self.positive("beam.waist_um", b.waist_um);
        self.finite("beam.offset_um", b.offset_um);
        self.non_negative("beam.carrier_khz", b.carrier_khz);
        if let Some(s) = b.sdf_khz {
            self.non_negative("beam.sdf_khz", s);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn pulse(&mut self, prefix: &str, detuning: f64, duration: f64, ramp: f64, shape: Shape, phase: f64, drive: f64) {
        if detuning == 0.0 || !detuning.is_finite() {
            self.0.push(format!(
                "{prefix}.detuning_khz: must be nonzero and finite, got {detuning}"
            ));
        }
        self.positive(&format!("{prefix}.duration_us"), duration);
        if shape == Shape::Sin2Ramps && !(ramp > 0.0 && 2.0 * ramp <= duration) {
            self.0.push(format!(
                "{prefix}.ramp_us: must be positive and at most half of duration_us for sin2 ramps, got {ramp}"
            ));
        }
        if !(phase > -1.0 && phase <= 1.0) || phase == 0.0 {
            self.0.push(format!(
                "{prefix}.target_phase_pi: must be nonzero within (-1, 1], got {phase}"
            ));
        }
        self.non_negative(&format!("{prefix}.drive_khz"), drive);
    }

    fn gate(&mut self, g: &GateSection, ions: Option<usize>) {
        self.pulse(
            "gate",
            g.detuning_khz,
            g.duration_us,
            g.ramp_us,
            g.shape,
            g.target_phase_pi,
            g.drive_khz,
        );
        self.at_least("gate.repetitions", g.repetitions, 1);
        if let Some(n) = ions {
            if g.pair[0] == g.pair[1] || g.pair.iter().any(|&j| j >= n) {
                self.0.push(format!("gate.pair: {:?} invalid for {n} ions", g.pair));
            }
            if g.mediator >= n {
                self.0
                    .push(format!("gate.mediator: {} out of range for {n} modes", g.mediator));
            }
        }
    }

    fn noise(&mut self, n: &NoiseSection, modes: Option<usize>) {
        if let Some(t) = n.t2_ms {
            self.positive("noise.t2_ms", t);
        }
        if let Some(t) = n.lifetime_ms {
            self.positive("noise.lifetime_ms", t);
        }
        self.list("noise.heating_per_s", &n.heating_per_s, modes);
        self.list("noise.initial_nbar", &n.initial_nbar, modes);
        self.non_negative("noise.crosstalk_fraction", n.crosstalk_fraction);
        self.non_negative("noise.pointing_nm", n.pointing_nm);
    }

    fn solver(&mut self, s: &SolverSection) {
        if let Some(f) = s.fock {
            self.at_least("solver.fock", f, 3);
        }
        self.at_least("solver.max_fock", s.max_fock, 3);
        self.at_least("solver.samples_per_gate", s.samples_per_gate, 1);
        self.positive("solver.rtol", s.rtol);
        self.positive("solver.atol", s.atol);
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let mut c = Checks(Vec::new());
        let k = self.kind;
        let ions = self.trap.as_ref().map(|t| t.ion_count);
        if let Some(t) = &self.trap {
            c.trap(t);
        }
        if let Some(b) = &self.beam {
            c.beam(b);
        }
        if let Some(g) = &self.gate {
            c.gate(g, ions);
        }
        if let Some(n) = &self.noise {
            c.noise(n, ions);
        }
        if let Some(s) = &self.solver {
            c.solver(s);
        }
        match k {
            Kind::Modes => c.require(k, "trap", &self.trap),
            Kind::BeamProfile => {
                c.require(k, "beam", &self.beam);
                c.require(k, "profile", &self.profile);
                if let Some(p) = &self.profile {
                    if !(p.z_max_um > p.z_min_um) {
                        c.0.push("profile.z_max_um: must exceed z_min_um".into());
                    }
                    c.at_least("profile.points", p.points, 2);
                    if let Some(s) = p.spacing_um {
                        c.positive("profile.spacing_um", s);
                    }
                }
            }
            Kind::Spectrum => {
                c.require(k, "trap", &self.trap);
                c.require(k, "beam", &self.beam);
                c.require(k, "spectrum", &self.spectrum);
                if let Some(s) = &self.spectrum {
                    if !(s.stop_mhz > s.start_mhz) {
                        c.0.push("spectrum.stop_mhz: must exceed start_mhz".into());
                    }
                    c.at_least("spectrum.points", s.points, 2);
                    c.positive("spectrum.probe_us", s.probe_us);
                    c.at_least("spectrum.fock", s.fock, 1);
                    if ions.is_some_and(|n| s.ion >= n) {
                        c.0.push(format!("spectrum.ion: {} out of range", s.ion));
                    }
                }
            }
            Kind::SdfSingle => {
                c.require(k, "sdf", &self.sdf);
                match &self.sdf {
                    Some(SdfSection::Profile {
                        offset_min_um,
                        offset_max_um,
                        points,
                        probe_us,
                    }) => {
                        c.require(k, "beam", &self.beam);
                        if !(offset_max_um > offset_min_um) {
                            c.0.push("sdf.offset_max_um: must exceed offset_min_um".into());
                        }
                        c.at_least("sdf.points", *points, 2);
                        c.positive("sdf.probe_us", *probe_us);
                    }
                    Some(SdfSection::Detuned {
                        detuning_khz,
                        drive_khz,
                        ramp_us,
                        shape,
                        nbar,
                        stop_us,
                        points,
                    }) => {
                        c.pulse("sdf", *detuning_khz, *stop_us, *ramp_us, *shape, 0.25, *drive_khz);
                        c.non_negative("sdf.nbar", *nbar);
                        c.at_least("sdf.points", *points, 2);
                    }
                    Some(SdfSection::Thermometry {
                        bsb_khz,
                        nbar,
                        stop_us,
                        points,
                        fock,
                        ..
                    }) => {
                        c.positive("sdf.bsb_khz", *bsb_khz);
                        c.non_negative("sdf.nbar", *nbar);
                        c.positive("sdf.stop_us", *stop_us);
                        c.at_least("sdf.points", *points, 8);
                        c.at_least("sdf.fock", *fock, 1);
                    }
                    None => {}
                }
            }
            Kind::Gate | Kind::Bell | Kind::RepeatGates | Kind::Budget => {
                c.require(k, "trap", &self.trap);
                c.require(k, "gate", &self.gate);
                if k == Kind::Bell {
                    if let Some(b) = &self.bell {
                        for (name, f) in [("bell.f_bright", b.f_bright), ("bell.f_dark", b.f_dark)] {
                            if !(f > 0.5 && f <= 1.0) {
                                c.0.push(format!("{name}: must lie in (0.5, 1], got {f}"));
                            }
                        }
                        c.at_least("bell.phases", b.phases, 8);
                    }
                }
                if k == Kind::RepeatGates {
                    if let Some(r) = &self.repeat {
                        c.at_least("repeat.max_gates", r.max_gates, 5);
                        for (i, p) in r.parity_pairs.iter().enumerate() {
                            if p[0] == p[1] || ions.is_some_and(|n| p.iter().any(|&j| j >= n)) {
                                c.0.push(format!("repeat.parity_pairs[{i}]: {p:?} invalid"));
                            }
                        }
                    }
                }
                if k == Kind::Budget {
                    if let Some(b) = &self.budget {
                        if b.gate_counts.len() < 3 || b.gate_counts.contains(&0) {
                            c.0.push("budget.gate_counts: need at least 3 positive counts".into());
                        }
                        c.at_least("budget.pointing_shots", b.pointing_shots, 1);
                        for (name, v) in &b.reference {
                            c.non_negative(&format!("budget.reference.{name}"), *v);
                        }
                    }
                    if self.noise.as_ref().is_some_and(|n| n.pointing_nm > 0.0) {
                        c.require(k, "beam", &self.beam);
                    }
                }
            }
            Kind::ChainSweep => {
                c.require(k, "sweep", &self.sweep);
                if let Some(s) = &self.sweep {
                    if s.gates.is_empty() || s.points.is_empty() {
                        c.0.push("sweep: needs at least one gate and one point".into());
                    }
                    for (i, g) in s.gates.iter().enumerate() {
                        let p = format!("sweep.gates[{i}]");
                        c.pulse(
                            &p,
                            g.detuning_khz,
                            g.duration_us,
                            g.ramp_us,
                            g.shape,
                            g.target_phase_pi,
                            g.drive_khz,
                        );
                        if s.gates.iter().filter(|o| o.label == g.label).count() > 1 {
                            c.0.push(format!("{p}.label: duplicate label {}", g.label));
                        }
                    }
                    for (i, p) in s.points.iter().enumerate() {
                        let f = format!("sweep.points[{i}]");
                        c.at_least(&format!("{f}.ion_count"), p.ion_count, 2);
                        c.positive(&format!("{f}.axial_mhz"), p.axial_mhz);
                        c.list(&format!("{f}.heating_per_s"), &p.heating_per_s, Some(p.ion_count));
                        c.list(&format!("{f}.initial_nbar"), &p.initial_nbar, Some(p.ion_count));
                        for g in &s.gates {
                            if g.mediator >= p.ion_count {
                                c.0.push(format!("{f}: gate {} mediator {} out of range", g.label, g.mediator));
                            }
                        }
                        for label in p.measured.keys() {
                            if s.gates.iter().all(|g| &g.label != label) {
                                c.0.push(format!("{f}.measured.{label}: no gate with that label"));
                            }
                        }
                    }
                }
            }
        }
        if c.0.is_empty() {
            Ok(())
        } else {
            Err(RunnerError::Validation(c.0))
        }
    }

    /// Whether any part of the run draws random numbers.
    pub fn is_stochastic(&self) -> bool {
        match self.kind {
            Kind::Bell => self.bell.as_ref().is_none_or(|b| b.shots > 0),
            Kind::SdfSingle => matches!(self.sdf, Some(SdfSection::Thermometry { shots, .. }) if shots > 0),
            Kind::Budget => self.noise.as_ref().is_some_and(|n| n.pointing_nm > 0.0),
            _ => false,
        }
    }

    pub fn solver(&self) -> SolverSection {
        self.solver.clone().unwrap_or_default()
    }

    pub fn noise_section(&self) -> NoiseSection {
        self.noise.clone().unwrap_or_default()
    }
}

fn missing(section: &str) -> RunnerError {
    RunnerError::Validation(vec![format!("[{section}]: required")])
}

pub fn trap_config(t: &TrapSection) -> TrapConfig {
    let mut trap = TrapConfig::ytterbium(t.ion_count, mhz(t.axial_mhz));
    if let Some(m) = t.mass_u {
        trap.ion_mass = m * ATOMIC_MASS_UNIT;
    }
    trap
}

impl Scenario {
    pub fn trap_config(&self) -> Result<TrapConfig> {
        self.trap.as_ref().map(trap_config).ok_or_else(|| missing("trap"))
    }

    /// Beam centred on `z_ion` plus the configured offset.
    pub fn beam_at(&self, z_ion: f64) -> Result<BeamProfile> {
        let b = self.beam.as_ref().ok_or_else(|| missing("beam"))?;
        BeamProfile::new(
            b.kind,
            b.waist_um * 1e-6,
            z_ion + b.offset_um * 1e-6,
            khz(b.carrier_khz),
        )
        .context("beam")
    }

    /// The configured gate, calibrated when requested. Crosstalk is not applied.
    pub fn gate_spec(&self, modes: &ModeSet) -> Result<GateSpec> {
        let g = self.gate.as_ref().ok_or_else(|| missing("gate"))?;
        build_gate(
            modes,
            (g.pair[0], g.pair[1]),
            g.mediator,
            g.detuning_khz,
            envelope(g.duration_us, g.ramp_us, g.shape),
            g.target_phase_pi,
            g.drive_khz,
            g.calibrate,
        )
    }

    pub fn noise_model(&self, mode_count: usize) -> NoiseModel {
        noise_model(&self.noise_section(), mode_count)
    }

    pub fn master_settings(&self, repetitions: usize) -> MasterSettings {
        let s = self.solver();
        MasterSettings {
            fock: s.fock,
            max_fock: s.max_fock,
            repetitions,
            samples_per_gate: s.samples_per_gate,
            tolerances: Tolerances {
                rtol: s.rtol,
                atol: s.atol,
                ..Tolerances::default()
            },
            ..MasterSettings::default()
        }
    }
}

pub fn envelope(duration_us: f64, ramp_us: f64, shape: Shape) -> PulseEnvelope {
    match shape {
        Shape::Flat => PulseEnvelope::flat(duration_us * 1e-6),
        Shape::Sin2Ramps => PulseEnvelope::sin2(duration_us * 1e-6, ramp_us * 1e-6),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn build_gate(
    modes: &ModeSet,
    pair: (usize, usize),
    mediator: usize,
    detuning_khz: f64,
    env: PulseEnvelope,
    target_phase_pi: f64,
    drive_khz: f64,
    calibrate: bool,
) -> Result<GateSpec> {
    let g = GateSpec::new(
        modes,
        pair,
        mediator,
        khz(detuning_khz),
        env,
        target_phase_pi * PI,
        khz(drive_khz),
    )
    .context("gate")?;
    if calibrate {
        hgsim_core::dynamics::calibrate_gate(&g, modes).context("gate calibration")
    } else {
        Ok(g)
    }
}

fn padded(xs: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| xs.get(i).copied().unwrap_or(0.0)).collect()
}

pub fn noise_model(n: &NoiseSection, mode_count: usize) -> NoiseModel {
    NoiseModel {
        t2: n.t2_ms.map(|t| t * 1e-3),
        dephasing: n.dephasing,
        heating_rates: padded(&n.heating_per_s, mode_count),
        heating: n.heating,
        lifetime: n.lifetime_ms.map(|t| t * 1e-3),
        crosstalk: n.crosstalk_fraction,
        pointing_sigma: n.pointing_nm * 1e-9,
        initial_nbar: padded(&n.initial_nbar, mode_count),
    }
}

/// Per-mode list from a sweep point, padded with zeros.
pub fn per_mode(xs: &[f64], n: usize) -> Vec<f64> {
    padded(xs, n)
}
