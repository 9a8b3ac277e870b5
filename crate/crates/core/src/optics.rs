//! Transverse field models for the addressing beams and their sampling at ion sites.
//!
//! All profiles are normalized so that `max_z |E(z)| = 1`.  Gradients are in 1/m.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::chain::IonChain;
use crate::error::{Error, Result};

/// Location of the maximum of the Dawson function.
pub const DAWSON_PEAK_X: f64 = 0.924_138_873_004_591_8;
/// Maximum value of the Dawson function.
pub const DAWSON_PEAK: f64 = 0.541_044_224_635_181_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamKind {
    Gaussian,
    Hg01Ideal,
    ZeroPi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamProfile {
    pub kind: BeamKind,
    /// Waist parameter `w₀` in m.
    pub waist: f64,
    /// Axial position of the dark slit (or intensity centre) in m.
    pub center: f64,
    /// Carrier Rabi frequency at the amplitude maximum, rad/s.
    pub omega_ref: f64,
}

impl BeamProfile {
    pub fn new(kind: BeamKind, waist: f64, center: f64, omega_ref: f64) -> Result<Self> {
        if !(waist > 0.0 && waist.is_finite()) {
            return Err(Error::InvalidConfig(format!("waist must be positive, got {waist}")));
        }
        if !(omega_ref >= 0.0 && omega_ref.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "omega_ref must be non-negative, got {omega_ref}"
            )));
        }
        Ok(Self {
            kind,
            waist,
            center,
            omega_ref,
        })
    }

    pub fn shifted(&self, dz: f64) -> Self {
        Self {
            center: self.center + dz,
            ..*self
        }
    }
}

/// Dawson integral `D(x) = exp(−x²) ∫₀ˣ exp(t²) dt`, accurate to ~1e-15 relative.
pub fn dawson(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.2 {
        dawson_series(x)
    } else if ax > 50.0 {
        dawson_asymptotic(x)
    } else {
        x.signum() * dawson_rybicki(ax)
    }
}

// Σ (−2)^k x^(2k+1) / (2k+1)!!
fn dawson_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for k in 1..14 {
        term *= -2.0 * x2 / (2 * k + 1) as f64;
        sum += term;
    }
    sum
}

// 1/(2x) Σ (2k−1)!! / (2x²)^k
fn dawson_asymptotic(x: f64) -> f64 {
    let r = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..8 {
        term *= (2 * k - 1) as f64 * r;
        sum += term;
    }
    sum / (2.0 * x)
}

// Rybicki's sampling formula D(x) = (1/√π) Σ_{n odd} exp(−(x − n h)²) / n, for x > 0.
fn dawson_rybicki(x: f64) -> f64 {
    const H: f64 = 0.2;
    const REACH: f64 = 7.0;
    let lo = ((x - REACH) / H).floor() as i64;
    let hi = ((x + REACH) / H).ceil() as i64;
    let mut sum = 0.0;
    for n in lo..=hi {
        if n % 2 == 0 {
            continue;
        }
        let d = x - n as f64 * H;
        sum += (-d * d).exp() / n as f64;
    }
    sum / PI.sqrt()
}

/// Width `σ_f` of the phase-plate profile whose peaks sit at `±w₀/√2`.
pub fn zero_pi_sigma(w0: f64) -> f64 {
    w0 * FRAC_1_SQRT_2 / DAWSON_PEAK_X
}

/// Focal field of a Gaussian beam carrying a half-plane π phase step, peak-normalized.
pub fn zero_pi_focal_field(w0: f64, z: f64) -> f64 {
    dawson(z / zero_pi_sigma(w0)) / DAWSON_PEAK
}

fn zero_pi_focal_gradient(w0: f64, z: f64) -> f64 {
    let s = zero_pi_sigma(w0);
    let x = z / s;
    (1.0 - 2.0 * x * dawson(x)) / (s * DAWSON_PEAK)
}

/// Signed field amplitude at axial position `z`.
pub fn field_amplitude(profile: &BeamProfile, z: f64) -> f64 {
    let w = profile.waist;
    let x = z - profile.center;
    match profile.kind {
        BeamKind::Gaussian => (-(x * x) / (w * w)).exp(),
        BeamKind::Hg01Ideal => SQRT_2 * (x / w) * (0.5 - x * x / (w * w)).exp(),
        BeamKind::ZeroPi => zero_pi_focal_field(w, x),
    }
}

/// Signed derivative `∂E/∂z` in 1/m.
pub fn field_gradient(profile: &BeamProfile, z: f64) -> f64 {
    let w = profile.waist;
    let x = z - profile.center;
    match profile.kind {
        BeamKind::Gaussian => -2.0 * x / (w * w) * (-(x * x) / (w * w)).exp(),
        BeamKind::Hg01Ideal => SQRT_2 / w * (1.0 - 2.0 * x * x / (w * w)) * (0.5 - x * x / (w * w)).exp(),
        BeamKind::ZeroPi => zero_pi_focal_gradient(w, x),
    }
}

/// Gradient length `w_g` that maps the ideal HG01 slit gradient to one.
pub fn gradient_length(profile: &BeamProfile) -> f64 {
    profile.waist * (-0.5f64).exp() * FRAC_1_SQRT_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSample {
    /// `Ω_ref · |E(z)|`, rad/s.
    pub carrier_rabi: f64,
    /// `Ω_ref · |∂E/∂z| · w_g`, rad/s.
    pub gradient_rabi_scale: f64,
    pub carrier_sign: f64,
    pub gradient_sign: f64,
}

impl CouplingSample {
    pub fn signed_gradient(&self) -> f64 {
        self.gradient_sign * self.gradient_rabi_scale
    }

    pub fn signed_carrier(&self) -> f64 {
        self.carrier_sign * self.carrier_rabi
    }
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

pub fn coupling_sample(profile: &BeamProfile, z_ion: f64) -> CouplingSample {
    let e = field_amplitude(profile, z_ion);
    let g = field_gradient(profile, z_ion) * gradient_length(profile);
    CouplingSample {
        carrier_rabi: profile.omega_ref * e.abs(),
        gradient_rabi_scale: profile.omega_ref * g.abs(),
        carrier_sign: sign(e),
        gradient_sign: sign(g),
    }
}

/// Gradient at distance `d` from the slit relative to the slit gradient.
pub fn gradient_crosstalk(profile: &BeamProfile, d: f64) -> f64 {
    field_gradient(profile, profile.center + d) / field_gradient(profile, profile.center)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamArray {
    pub beams: Vec<BeamProfile>,
    /// `targets[b]` is the ion addressed by beam `b`.
    pub targets: Vec<usize>,
}

impl BeamArray {
    /// One beam of the given shape centred on each target ion.
    pub fn aligned(template: &BeamProfile, chain: &IonChain, targets: &[usize]) -> Result<Self> {
        let beams = targets
            .iter()
            .map(|&t| {
                chain
                    .positions
                    .get(t)
                    .map(|z| BeamProfile {
                        center: *z,
                        ..*template
                    })
                    .ok_or_else(|| Error::InvalidArgument(format!("target ion {t} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            beams,
            targets: targets.to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkMatrix {
    /// `carrier[b][j]`, signed.
    pub carrier: Vec<Vec<f64>>,
    /// `gradient[b][j]`, signed.
    pub gradient: Vec<Vec<f64>>,
}

/// Couplings of every beam at every ion, relative to the beam's coupling at its target.
///
/// Where a beam has no carrier coupling at its own target (an aligned dark slit) the
/// carrier row is taken relative to the profile maximum instead.
pub fn crosstalk_matrix(array: &BeamArray, chain: &IonChain) -> Result<CrosstalkMatrix> {
    if array.beams.is_empty() {
        return Err(Error::InvalidArgument("beam array is empty".into()));
    }
    if array.beams.len() != array.targets.len() {
        return Err(Error::InvalidArgument("each beam needs exactly one target ion".into()));
    }
    let mut carrier = Vec::with_capacity(array.beams.len());
    let mut gradient = Vec::with_capacity(array.beams.len());
    for (beam, &t) in array.beams.iter().zip(&array.targets) {
        let zt = *chain
            .positions
            .get(t)
            .ok_or_else(|| Error::InvalidArgument(format!("target ion {t} out of range")))?;
        let e0 = field_amplitude(beam, zt);
        let g0 = field_gradient(beam, zt);
        let e_ref = if e0.abs() > 1e-12 { e0 } else { 1.0 };
        if g0 == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "beam on ion {t} has zero gradient at its target"
            )));
        }
        carrier.push(
            chain
                .positions
                .iter()
                .map(|z| field_amplitude(beam, *z) / e_ref)
                .collect(),
        );
        gradient.push(chain.positions.iter().map(|z| field_gradient(beam, *z) / g0).collect());
    }
    Ok(CrosstalkMatrix { carrier, gradient })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Along the chain, across the dark slit.
    Axial,
    /// Transverse, along the slit, where the profile is the Gaussian envelope.
    Transverse,
}

/// D4σ diameter of `|E|²` from a numerical second-moment integral.
pub fn d4sigma(profile: &BeamProfile, axis: Axis) -> f64 {
    let w = profile.waist;
    let half = match profile.kind {
        BeamKind::ZeroPi if axis == Axis::Axial => 400.0 * w,
        _ => 12.0 * w,
    };
    let n = 400_000;
    let h = 2.0 * half / n as f64;
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..=n {
        let x = -half + i as f64 * h;
        let e = match axis {
            Axis::Axial => field_amplitude(profile, profile.center + x),
            Axis::Transverse => (-(x * x) / (w * w)).exp(),
        };
        let wt = if i == 0 || i == n { 0.5 } else { 1.0 };
        let i2 = wt * e * e;
        m0 += i2;
        m1 += i2 * x;
        m2 += i2 * x * x;
    }
    let mean = m1 / m0;
    4.0 * (m2 / m0 - mean * mean).sqrt()
}

/// Positions of the two amplitude maxima of an odd profile, found by golden-section search.
pub fn peak_separation(profile: &BeamProfile) -> f64 {
    let w = profile.waist;
    let f = |x: f64| -field_amplitude(profile, profile.center + x);
    let (mut a, mut b) = (1e-6 * w, 4.0 * w);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while (b - a).abs() > 1e-13 * w {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let right = 0.5 * (a + b);
    match profile.kind {
        BeamKind::Gaussian => 0.0,
        _ => 2.0 * right,
    }
}

/// Samples `(z, E, ∂E/∂z)` on a uniform grid.
pub fn sample_profile(profile: &BeamProfile, z_min: f64, z_max: f64, points: usize) -> Vec<[f64; 3]> {
    let steps = points.max(2) - 1;
    (0..=steps)
        .map(|i| {
            let z = z_min + (z_max - z_min) * i as f64 / steps as f64;
            [z, field_amplitude(profile, z), field_gradient(profile, z)]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const UM: f64 = 1e-6;

    fn hg(kind: BeamKind) -> BeamProfile {
        BeamProfile::new(kind, 1.0 * UM, 0.0, 1.0).unwrap()
    }

    #[test]
    fn dawson_reference_values() {
        // Values from the continued fraction / high-precision tables.
        let table = [
            (0.1, 0.099_335_992_397_852_86),
            (0.5, 0.424_436_383_502_022_2),
            (1.0, 0.538_079_506_912_768_4),
            (2.0, 0.301_340_388_923_791_97),
            (5.0, 0.102_134_074_424_276_9),
            (10.0, 0.050_253_847_187_598_53),
            (100.0, 0.005_000_250_037_509_378),
        ];
        for (x, want) in table {
            let got = dawson(x);
            assert!(((got - want) / want).abs() < 1e-13, "D({x}) = {got}, want {want}");
            assert_eq!(dawson(-x), -got);
        }
    }

    #[test]
    fn dawson_continuity_at_branches() {
        let (a, b) = (dawson_series(0.2), dawson_rybicki(0.2));
        assert!(((a - b) / a).abs() < 1e-14);
        let (a, b) = (dawson_asymptotic(50.0), dawson_rybicki(50.0));
        assert!(((a - b) / a).abs() < 1e-13);
    }

    #[test]
    fn dawson_peak_constants() {
        let x = DAWSON_PEAK_X;
        assert!((1.0 - 2.0 * x * dawson(x)).abs() < 1e-14);
        assert!((dawson(x) - DAWSON_PEAK).abs() < 1e-15);
    }

    #[test]
    fn dark_slit_and_peaks() {
        let p = hg(BeamKind::Hg01Ideal);
        assert_eq!(field_amplitude(&p, 0.0), 0.0);
        assert!((field_amplitude(&p, FRAC_1_SQRT_2 * UM) - 1.0).abs() < 1e-15);
        assert!(field_gradient(&p, FRAC_1_SQRT_2 * UM).abs() < 1e-6);
        let g = hg(BeamKind::Gaussian);
        assert_eq!(field_amplitude(&g, 0.0), 1.0);
    }

    #[test]
    fn slit_gradient_maps_to_omega_ref() {
        let p = BeamProfile::new(BeamKind::Hg01Ideal, 1.0 * UM, 0.0, 3.0).unwrap();
        let s = coupling_sample(&p, 0.0);
        assert_eq!(s.carrier_rabi, 0.0);
        assert!((s.gradient_rabi_scale - 3.0).abs() < 1e-12);
        let off = coupling_sample(&p, FRAC_1_SQRT_2 * UM);
        assert!((off.carrier_rabi - 3.0).abs() < 1e-12);
        assert!(off.gradient_rabi_scale < 1e-9);
    }

    #[test]
    fn zero_pi_peaks_match_hg01() {
        let a = peak_separation(&hg(BeamKind::ZeroPi));
        let b = peak_separation(&hg(BeamKind::Hg01Ideal));
        assert!((a - b).abs() < 1e-7 * UM);
        assert!((b - SQRT_2 * UM).abs() < 1e-7 * UM);
    }

    #[test]
    fn crosstalk_zero_pi_about_one_percent() {
        let c = gradient_crosstalk(&hg(BeamKind::ZeroPi), 5.4 * UM).abs();
        assert!((c - 0.0103).abs() < 2e-4, "{c}");
        let h = gradient_crosstalk(&hg(BeamKind::Hg01Ideal), 5.4 * UM).abs();
        assert!(h < c * 1e-6);
    }

    #[test]
    fn d4sigma_transverse_is_two_waists() {
        let d = d4sigma(&hg(BeamKind::Hg01Ideal), Axis::Transverse);
        assert!((d - 2.0 * UM).abs() < 1e-6 * UM);
        let d = d4sigma(&hg(BeamKind::Hg01Ideal), Axis::Axial);
        assert!((d - 2.0 * 3f64.sqrt() * UM).abs() < 1e-6 * UM);
    }

    #[test]
    fn crosstalk_matrix_shapes() {
        let chain = IonChain {
            positions: vec![-5.4 * UM, 0.0, 5.4 * UM],
            length_scale: 5.0 * UM,
        };
        let array = BeamArray::aligned(&hg(BeamKind::ZeroPi), &chain, &[0, 2]).unwrap();
        let x = crosstalk_matrix(&array, &chain).unwrap();
        assert!((x.gradient[0][0] - 1.0).abs() < 1e-15);
        assert!((x.gradient[1][2] - 1.0).abs() < 1e-15);
        assert!((x.gradient[0][1].abs() - 0.0103).abs() < 2e-4);
        let empty = BeamArray {
            beams: vec![],
            targets: vec![],
        };
        assert!(crosstalk_matrix(&empty, &chain).is_err());
    }
}
