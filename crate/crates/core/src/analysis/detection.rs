//! State-detection error model and constrained population correction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `M = M₁^{⊗N}` with `M₁ = [[f_b, 1 − f_d], [1 − f_b, f_d]]` (columns: true `|0⟩`, `|1⟩`).
///
/// `|0⟩` is the bright state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    pub f_bright: f64,
    pub f_dark: f64,
    pub qubits: usize,
}

pub fn detection_matrix(f_bright: f64, f_dark: f64, qubits: usize) -> Result<DetectionModel> {
    for (name, f) in [("f_bright", f_bright), ("f_dark", f_dark)] {
        if !(f > 0.5 && f <= 1.0) {
            return Err(Error::InvalidArgument(format!("{name} = {f} outside (0.5, 1]")));
        }
    }
    if qubits == 0 {
        return Err(Error::InvalidArgument(
            "detection model needs at least one qubit".into(),
        ));
    }
    if qubits > 12 {
        return Err(Error::SizeGuard(format!(
            "{qubits}-qubit detection matrix exceeds 12 qubits"
        )));
    }
    Ok(DetectionModel {
        f_bright,
        f_dark,
        qubits,
    })
}

impl DetectionModel {
    pub fn single(&self) -> [[f64; 2]; 2] {
        [[self.f_bright, 1.0 - self.f_dark], [1.0 - self.f_bright, self.f_dark]]
    }

    /// Mean single-qubit detection fidelity.
    pub fn mean_fidelity(&self) -> f64 {
        0.5 * (self.f_bright + self.f_dark)
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    /// Dense row-major `2^N × 2^N` matrix.
    pub fn matrix(&self) -> Vec<f64> {
        let d = self.dim();
        let m1 = self.single();
        let mut m = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                m[r * d + c] = (0..self.qubits)
                    .map(|k| {
                        let s = self.qubits - 1 - k;
                        m1[(r >> s) & 1][(c >> s) & 1]
                    })
                    .product();
            }
        }
        m
    }

    /// `M · p` (or `Mᵀ · p`) through the tensor structure.
    fn apply(&self, p: &[f64], transpose: bool) -> Vec<f64> {
        let mut m1 = self.single();
        if transpose {
            m1 = [[m1[0][0], m1[1][0]], [m1[0][1], m1[1][1]]];
        }
        kron_apply(&m1, self.qubits, p)
    }

    pub fn measure(&self, p: &[f64]) -> Vec<f64> {
        self.apply(p, false)
    }
}

fn kron_apply(m1: &[[f64; 2]; 2], qubits: usize, p: &[f64]) -> Vec<f64> {
    let mut v = p.to_vec();
    for k in 0..qubits {
        let stride = 1 << (qubits - 1 - k);
        for base in 0..v.len() {
            if base & stride != 0 {
                continue;
            }
            let (x0, x1) = (v[base], v[base + stride]);
            v[base] = m1[0][0] * x0 + m1[0][1] * x1;
            v[base + stride] = m1[1][0] * x0 + m1[1][1] * x1;
        }
    }
    v
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, x) in u.iter().enumerate() {
        css += x;
        let t = (css - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub populations: Vec<f64>,
    /// `‖P_meas − M·P_real‖₂`.
    pub residual: f64,
    pub iterations: usize,
}

/// Minimizes `‖P_meas − M·P‖₂` over the probability simplex.
///
/// The unconstrained solution is used when it is already a distribution; otherwise an
/// accelerated projected-gradient solve starts from its projection.
pub fn correct_populations(measured: &[f64], model: &DetectionModel) -> Result<Correction> {
    let d = model.dim();
    if measured.len() != d {
        return Err(Error::InvalidArgument(format!(
            "{} populations for {} outcomes",
            measured.len(),
            d
        )));
    }
    if measured.iter().any(|p| !(p.is_finite() && *p >= -1e-12)) || (measured.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(
            "measured populations are not a distribution".into(),
        ));
    }
    let m1 = model.single();
    let det = m1[0][0] * m1[1][1] - m1[0][1] * m1[1][0];
    // Singular values of the 2×2 block; the tensor power raises the ratio to the N-th power.
    let fro = m1.iter().flatten().map(|x| x * x).sum::<f64>();
    let disc = (fro * fro - 4.0 * det * det).max(0.0).sqrt();
    let (smax, smin) = (((fro + disc) / 2.0).sqrt(), ((fro - disc) / 2.0).max(0.0).sqrt());
    let cond = (smax / smin).powi(model.qubits as i32);
    if !(cond.is_finite() && cond < 1e10) {
        return Err(Error::Conditioning(format!(
            "detection matrix condition number {cond:.3e}"
        )));
    }
    let inv = [[m1[1][1] / det, -m1[0][1] / det], [-m1[1][0] / det, m1[0][0] / det]];
    let raw = kron_apply(&inv, model.qubits, measured);
    let residual = |x: &[f64]| -> f64 {
        model
            .measure(x)
            .iter()
            .zip(measured)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    // Rounding can push exact zeros slightly negative.
    if raw.iter().all(|x| *x >= -1e-12) {
        let clipped: Vec<f64> = raw.iter().map(|x| x.max(0.0)).collect();
        let s: f64 = clipped.iter().sum();
        let populations: Vec<f64> = clipped.iter().map(|x| x / s).collect();
        let r = residual(&populations);
        return Ok(Correction {
            populations,
            residual: r,
            iterations: 0,
        });
    }
    let step = 1.0 / (smax * smax).powi(model.qubits as i32);
    let mut x = project_simplex(&raw);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    for it in 1..=50_000 {
        iterations = it;
        let r: Vec<f64> = model.measure(&y).iter().zip(measured).map(|(a, b)| a - b).collect();
        let g = model.apply(&r, true);
        let z: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let next = project_simplex(&z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let change = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        y = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        x = next;
        t = t_next;
        if change < 1e-15 {
            break;
        }
    }
    let r = residual(&x);
    Ok(Correction {
        populations: x,
        residual: r,
        iterations,
    })
}

/// Multinomial outcome counts for `shots` repetitions.
pub fn sample_counts(p: &[f64], shots: u64, seed: u64) -> Result<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut left = shots;
    let mut mass = 1.0;
    let mut counts = Vec::with_capacity(p.len());
    for (i, &pi) in p.iter().enumerate() {
        if i + 1 == p.len() {
            counts.push(left);
            break;
        }
        let q = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(left, q)
            .map_err(|e| Error::InvalidArgument(format!("outcome probability {pi}: {e}")))?
            .sample(&mut rng);
        counts.push(c);
        left -= c;
        mass -= pi;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_fidelity() {
        let m = detection_matrix(0.9891, 0.9909, 1).unwrap();
        assert!((m.mean_fidelity() - 0.99).abs() < 5e-4);
        assert!(detection_matrix(0.5, 0.9, 2).is_err());
        assert!(matches!(detection_matrix(0.99, 0.99, 13), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn tensor_structure() {
        let m = detection_matrix(0.97, 0.95, 2).unwrap();
        let d = m.matrix();
        let m1 = m.single();
        for r in 0..4 {
            for c in 0..4 {
                assert!((d[r * 4 + c] - m1[r >> 1][c >> 1] * m1[r & 1][c & 1]).abs() < 1e-15);
            }
        }
        for c in 0..4 {
            assert!(((0..4).map(|r| d[r * 4 + c]).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let p = [0.1, 0.2, 0.3, 0.4];
        let dense: Vec<f64> = (0..4).map(|r| (0..4).map(|c| d[r * 4 + c] * p[c]).sum()).collect();
        for (a, b) in dense.iter().zip(m.measure(&p)) {
            assert!((a - b).abs() < 1e-15);
        }
        let id = detection_matrix(1.0, 1.0, 3).unwrap();
        assert_eq!(
            id.measure(&[0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5]),
            vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5]
        );
    }

    #[test]
    fn clips_to_simplex() {
        let m = detection_matrix(0.99, 0.99, 2).unwrap();
        // Below the detection floor: raw inversion goes negative.
        let c = correct_populations(&[0.5, 0.0, 0.0, 0.5], &m).unwrap();
        assert!(c.populations.iter().all(|x| *x >= 0.0));
        assert!((c.populations.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(c.residual > 0.0 && c.iterations > 0);
        let near = detection_matrix(0.5 + 1e-9, 0.5 + 1e-9, 2).unwrap();
        assert!(matches!(
            correct_populations(&[0.25; 4], &near),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn noisy_bell_correction_within_two_sigma() {
        let m = detection_matrix(0.9891, 0.9909, 2).unwrap();
        let truth = [0.49, 0.01, 0.01, 0.49];
        let meas = m.measure(&truth);
        let shots = 10_000;
        let estimate = |seed: u64| {
            let counts = sample_counts(&meas, shots, seed).unwrap();
            let f: Vec<f64> = counts.iter().map(|c| *c as f64 / shots as f64).collect();
            let c = correct_populations(&f, &m).unwrap().populations;
            c[0] + c[3]
        };
        let runs: Vec<f64> = (1..=200).map(estimate).collect();
        let mean = runs.iter().sum::<f64>() / runs.len() as f64;
        let sd = (runs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (runs.len() - 1) as f64).sqrt();
        assert!(
            (estimate(2024) - 0.98).abs() < 2.0 * sd,
            "{} vs sd {sd}",
            estimate(2024)
        );
        assert!((mean - 0.98).abs() < 3.0 * sd / (runs.len() as f64).sqrt());
    }

    proptest! {
        #[test]
        fn round_trip(raw in proptest::collection::vec(0.0f64..1.0, 8), fb in 0.9f64..=1.0, fd in 0.9f64..=1.0) {
            let s: f64 = raw.iter().sum::<f64>() + 1e-9;
            let p: Vec<f64> = raw.iter().map(|x| (x + 1e-9 / 8.0) / s).collect();
            let m = detection_matrix(fb, fd, 3).unwrap();
            let c = correct_populations(&m.measure(&p), &m).unwrap();
            for (a, b) in c.populations.iter().zip(&p) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }

        #[test]
        fn projection_is_a_distribution(v in proptest::collection::vec(-2.0f64..2.0, 1..16)) {
            let p = project_simplex(&v);
            prop_assert!(p.iter().all(|x| *x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
