use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Flat,
    Sin2Ramps,
}

/// Amplitude envelope of a pulse on `[0, duration]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    /// Total duration in s, ramps included.
    pub duration: f64,
    /// Length of each sin² ramp in s. Ignored for flat pulses.
    pub ramp: f64,
    pub shape: Shape,
    /// Peak scaling in `[0, 1]`.
    pub peak: f64,
}

/// A stretch of the envelope written as `Σ c_k exp(i ω_k t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub terms: Vec<(C64, f64)>,
}

impl PulseEnvelope {
    pub fn flat(duration: f64) -> Self {
        Self {
            duration,
            ramp: 0.0,
            shape: Shape::Flat,
            peak: 1.0,
        }
    }

    pub fn sin2(duration: f64, ramp: f64) -> Self {
        Self {
            duration,
            ramp,
            shape: Shape::Sin2Ramps,
            peak: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "pulse duration must be positive, got {}",
                self.duration
            )));
        }
        if self.shape == Shape::Sin2Ramps && !(self.ramp > 0.0 && 2.0 * self.ramp <= self.duration) {
            return Err(Error::InvalidConfig(format!(
                "ramp {} must be positive and at most half the duration {}",
                self.ramp, self.duration
            )));
        }
        if !(0.0..=1.0).contains(&self.peak) {
            return Err(Error::InvalidConfig(format!(
                "peak scaling must lie in [0, 1], got {}",
                self.peak
            )));
        }
        Ok(())
    }

    fn effective_ramp(&self) -> f64 {
        match self.shape {
            Shape::Flat => 0.0,
            Shape::Sin2Ramps => self.ramp,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        if !(0.0..=self.duration).contains(&t) {
            return 0.0;
        }
        let r = self.effective_ramp();
        let s = if r > 0.0 && t < r {
            (0.5 * PI * t / r).sin().powi(2)
        } else if r > 0.0 && t > self.duration - r {
            (0.5 * PI * (self.duration - t) / r).sin().powi(2)
        } else {
            1.0
        };
        self.peak * s
    }

    /// Times where the envelope changes functional form.
    pub fn breakpoints(&self) -> Vec<f64> {
        let r = self.effective_ramp();
        let mut b = vec![0.0];
        if r > 0.0 {
            b.push(r);
            if self.duration - r > r {
                b.push(self.duration - r);
            }
        }
        b.push(self.duration);
        b
    }

    pub fn segments(&self) -> Vec<Segment> {
        let p = self.peak;
        let t = self.duration;
        let r = self.effective_ramp();
        let flat = |start, end| Segment {
            start,
            end,
            terms: vec![(C64::new(p, 0.0), 0.0)],
        };
        if r == 0.0 {
            return vec![flat(0.0, t)];
        }
        let w = PI / r;
        let q = C64::new(-0.25 * p, 0.0);
        // sin²(πt/2r) = ½ − ¼e^{iwt} − ¼e^{−iwt}
        let up = Segment {
            start: 0.0,
            end: r,
            terms: vec![(C64::new(0.5 * p, 0.0), 0.0), (q, w), (q, -w)],
        };
        // sin²(π(T−t)/2r) = ½ − ¼e^{iwT}e^{−iwt} − ¼e^{−iwT}e^{iwt}
        let phase = C64::from_polar(1.0, w * t);
        let down = Segment {
            start: t - r,
            end: t,
            terms: vec![(C64::new(0.5 * p, 0.0), 0.0), (q * phase, -w), (q * phase.conj(), w)],
        };
        let mut segs = vec![up];
        if t - r > r {
            segs.push(flat(r, t - r));
        }
        segs.push(down);
        segs
    }

    /// Pulse area `∫ f dt`.
    pub fn area(&self) -> f64 {
        self.peak * (self.duration - self.effective_ramp())
    }
}

/// `∫_a^b exp(iκt) dt`, stable as κ → 0.
pub fn exp_integral(kappa: f64, a: f64, b: f64) -> C64 {
    let d = b - a;
    let x = 0.5 * kappa * d;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    C64::from_polar(d * sinc, kappa * (a + 0.5 * d))
}

/// `J(t) = ∫₀ᵗ f(t') exp(−iδt') dt'`, evaluated in closed form.
pub fn envelope_integral(segments: &[Segment], delta: f64, t: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for s in segments {
        if t <= s.start {
            break;
        }
        let end = t.min(s.end);
        for (c, w) in &s.terms {
            acc += c * exp_integral(w - delta, s.start, end);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_reproduce_values() {
        let e = PulseEnvelope::sin2(120e-6, 20e-6);
        let segs = e.segments();
        for i in 0..=240 {
            let t = i as f64 * 0.5e-6;
            let seg = segs.iter().find(|s| t >= s.start && t <= s.end).unwrap();
            let v: C64 = seg.terms.iter().map(|(c, w)| c * C64::from_polar(1.0, w * t)).sum();
            assert!((v.re - e.value(t)).abs() < 1e-14 && v.im.abs() < 1e-14, "t={t}");
        }
    }

    #[test]
    fn envelope_endpoints_and_validation() {
        let e = PulseEnvelope::sin2(120e-6, 20e-6);
        assert_eq!(e.value(0.0), 0.0);
        assert!(e.value(120e-6).abs() < 1e-30);
        assert_eq!(e.value(60e-6), 1.0);
        assert!(PulseEnvelope::sin2(30e-6, 20e-6).validate().is_err());
        assert!(PulseEnvelope::flat(-1.0).validate().is_err());
        assert_eq!(e.breakpoints(), vec![0.0, 20e-6, 100e-6, 120e-6]);
    }

    #[test]
    fn closed_form_integral_matches_riemann() {
        let e = PulseEnvelope::sin2(120e-6, 20e-6);
        let segs = e.segments();
        let delta = 2.0 * PI * 13e3;
        let n = 200_000;
        let h = 120e-6 / n as f64;
        let mut sum = C64::new(0.0, 0.0);
        for i in 0..n {
            let t = (i as f64 + 0.5) * h;
            sum += e.value(t) * C64::from_polar(1.0, -delta * t) * h;
        }
        let j = envelope_integral(&segs, delta, 120e-6);
        assert!((j - sum).norm() < 1e-12, "{j} vs {sum}");
        assert!((envelope_integral(&segs, 0.0, 1.0).re - e.area()).abs() < 1e-18);
    }
}
