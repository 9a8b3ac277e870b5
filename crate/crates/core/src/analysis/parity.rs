//! Parity oscillations after a global analysis `π/2` pulse of variable phase.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dynamics::state::ReducedState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityFit {
    /// Contrast `C` of `Π(φ) = C cos(2φ + φ₀)`, clipped to `[0, 1]`.
    pub contrast: f64,
    pub contrast_err: f64,
    /// Phase offset `φ₀` in `(−π, π]`.
    pub phase: f64,
    pub phase_err: f64,
    pub residual_rms: f64,
}

/// Least-squares fit of `Π(φ) = C cos(2φ + φ₀)`.
///
/// Needs at least 8 points whose phases span one period of `cos 2φ` on a uniform
/// grid, i.e. `max − min ≥ π (1 − 1/n)`.
pub fn parity_fit(phases: &[f64], parity: &[f64]) -> Result<ParityFit> {
    let n = phases.len();
    if n != parity.len() {
        return Err(Error::InvalidArgument(format!(
            "{n} phases but {} parity values",
            parity.len()
        )));
    }
    let under = |reason: &str| {
        Err(Error::Fit {
            reason: reason.to_string(),
            residual: f64::NAN,
        })
    };
    if n < 8 {
        return under("parity scan needs at least 8 phases");
    }
    if phases.iter().chain(parity).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite parity scan entry".into()));
    }
    let lo = phases.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = phases.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < PI * (1.0 - 1.0 / n as f64) - 1e-12 {
        return under("parity scan spans less than one period of cos 2φ");
    }
    // Normal equations for Π = a cos 2φ + b sin 2φ.
    let (mut scc, mut sss, mut scs, mut sc, mut ss) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&p, &y) in phases.iter().zip(parity) {
        let (s, c) = (2.0 * p).sin_cos();
        scc += c * c;
        sss += s * s;
        scs += c * s;
        sc += c * y;
        ss += s * y;
    }
    let det = scc * sss - scs * scs;
    if det.abs() < 1e-9 * (scc * sss).max(1e-300) {
        return under("parity scan phases are degenerate");
    }
    let a = (sc * sss - ss * scs) / det;
    let b = (ss * scc - sc * scs) / det;
    let rss: f64 = phases
        .iter()
        .zip(parity)
        .map(|(&p, &y)| {
            let (s, c) = (2.0 * p).sin_cos();
            (y - a * c - b * s).powi(2)
        })
        .sum();
    let sigma2 = rss / (n - 2) as f64;
    let (vaa, vbb, vab) = (sigma2 * sss / det, sigma2 * scc / det, -sigma2 * scs / det);
    let c = a.hypot(b);
    let (contrast_err, phase, phase_err) = if c > 0.0 {
        let ce = ((a * a * vaa + b * b * vbb + 2.0 * a * b * vab) / (c * c))
            .max(0.0)
            .sqrt();
        let pe = ((b * b * vaa + a * a * vbb - 2.0 * a * b * vab) / c.powi(4))
            .max(0.0)
            .sqrt();
        (ce, (-b).atan2(a), pe)
    } else {
        (((vaa + vbb) / 2.0).sqrt(), 0.0, PI)
    };
    Ok(ParityFit {
        contrast: c.min(1.0),
        contrast_err,
        phase,
        phase_err,
        residual_rms: (rss / n as f64).sqrt(),
    })
}

/// Outcome probabilities `[P00, P01, P10, P11]` of two chain ions after an analysis
/// pulse `R(π/2, φ)` on every ion. A leaked ion is untouched by the pulse and reads as `0`.
pub fn rotated_populations(state: &ReducedState, a: usize, b: usize, phi: f64) -> Result<[f64; 4]> {
    let pair = state
        .reduce(&[a, b])
        .ok_or_else(|| Error::InvalidArgument(format!("ions ({a}, {b}) not in the state")))?;
    let (da, db) = (pair.dims[0], pair.dims[1]);
    let n = da * db;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let rot = |d: usize| -> Vec<Vec<C64>> {
        let mut r = vec![vec![C64::new(0.0, 0.0); d]; d];
        r[0][0] = C64::new(h, 0.0);
        r[1][1] = C64::new(h, 0.0);
        r[0][1] = C64::new(0.0, -h) * C64::from_polar(1.0, -phi);
        r[1][0] = C64::new(0.0, -h) * C64::from_polar(1.0, phi);
        if d == 3 {
            r[2][2] = C64::new(1.0, 0.0);
        }
        r
    };
    let (ra, rb) = (rot(da), rot(db));
    let u = |i: usize, j: usize| ra[i / db][j / db] * rb[i % db][j % db];
    let bit = |l: usize| usize::from(l == 1);
    let mut p = [0.0; 4];
    for i in 0..n {
        // (U ρ U†)_ii
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..n {
            let uik = u(i, k);
            if uik == C64::new(0.0, 0.0) {
                continue;
            }
            for l in 0..n {
                acc += uik * pair.get(k, l) * u(i, l).conj();
            }
        }
        p[2 * bit(i / db) + bit(i % db)] += acc.re;
    }
    Ok(p)
}

/// Parity `P00 + P11 − P01 − P10` of outcome probabilities.
pub fn parity_of(p: &[f64; 4]) -> f64 {
    p[0] + p[3] - p[1] - p[2]
}

/// `⟨Z_a Z_b⟩` of two chain ions after an analysis pulse `R(π/2, φ)` on every ion.
///
/// A leaked ion is untouched by the pulse and reads as `|0⟩`.
pub fn parity_curve(state: &ReducedState, a: usize, b: usize, phases: &[f64]) -> Result<Vec<f64>> {
    phases
        .iter()
        .map(|&phi| rotated_populations(state, a, b, phi).map(|p| parity_of(&p)))
        .collect()
}

/// Parity contrast of a pair from a 16-point scan over one period.
pub fn pair_contrast(state: &ReducedState, a: usize, b: usize) -> Result<ParityFit> {
    let phases: Vec<f64> = (0..16).map(|i| PI * i as f64 / 16.0).collect();
    parity_fit(&phases, &parity_curve(state, a, b, &phases)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| PI * i as f64 / n as f64).collect()
    }

    #[test]
    fn recovers_contrast() {
        let ph = grid(12);
        let y: Vec<f64> = ph.iter().map(|p| 0.953 * (2.0 * p).cos()).collect();
        let f = parity_fit(&ph, &y).unwrap();
        assert!((f.contrast - 0.953).abs() < 1e-12);
        assert!(f.phase.abs() < 1e-12 && f.residual_rms < 1e-12);
        let zero = parity_fit(&ph, &[0.0; 12]).unwrap();
        assert_eq!(zero.contrast, 0.0);
    }

    #[test]
    fn phase_covariance() {
        let ph = grid(12);
        let y: Vec<f64> = ph
            .iter()
            .map(|p| 0.8 * (2.0 * p + 0.3).cos() + 0.01 * (7.0 * p).sin())
            .collect();
        let f = parity_fit(&ph, &y).unwrap();
        let d = 0.2;
        let shifted: Vec<f64> = ph.iter().map(|p| p - d).collect();
        let g = parity_fit(&shifted, &y).unwrap();
        assert!((f.contrast - g.contrast).abs() < 1e-12);
        assert!((g.phase - f.phase - 2.0 * d).abs() < 1e-12);
        assert!(f.contrast_err > 0.0);
    }

    #[test]
    fn rejects_short_scans() {
        assert!(parity_fit(&grid(6), &[0.0; 6]).is_err());
        let narrow: Vec<f64> = (0..10).map(|i| 0.1 * i as f64).collect();
        assert!(matches!(parity_fit(&narrow, &[0.0; 10]), Err(Error::Fit { .. })));
    }

    #[test]
    fn ideal_bell_has_unit_contrast() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let bell = ReducedState::pure(vec![0, 2], &[C64::new(h, 0.0), z, z, C64::new(0.0, -h)]);
        let f = pair_contrast(&bell, 0, 2).unwrap();
        assert!((f.contrast - 1.0).abs() < 1e-12, "{}", f.contrast);
        let prod = ReducedState::pure(vec![0, 2], &[C64::new(1.0, 0.0), z, z, z]);
        assert!(pair_contrast(&prod, 0, 2).unwrap().contrast < 1e-12);
        assert!(pair_contrast(&prod, 0, 1).is_err());
    }
}
