use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Density matrix over a register of ions, each with 2 levels or 3 (qubit plus leak).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    /// Ion indices in the chain, one per subsystem.
    pub ions: Vec<usize>,
    /// Levels per subsystem: 2, or 3 when the leak level is tracked.
    pub dims: Vec<usize>,
    /// Row-major `D × D` matrix.
    pub rho: Vec<C64>,
}

fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut d = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        d[k] = index % dims[k];
        index /= dims[k];
    }
    d
}

fn flatten(d: &[usize], dims: &[usize]) -> usize {
    d.iter().zip(dims).fold(0, |acc, (x, n)| acc * n + x)
}

impl ReducedState {
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.rho[a * self.dim() + b]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|a| self.get(a, a)).sum()
    }

    pub fn purity(&self) -> f64 {
        let n = self.dim();
        let mut p = 0.0;
        for a in 0..n {
            for b in 0..n {
                p += (self.get(a, b) * self.get(b, a)).re;
            }
        }
        p
    }

    fn position(&self, ion: usize) -> Option<usize> {
        self.ions.iter().position(|&i| i == ion)
    }

    /// Partial trace onto the listed chain ions, in the order given.
    pub fn reduce(&self, keep: &[usize]) -> Option<ReducedState> {
        let pos: Vec<usize> = keep.iter().map(|&i| self.position(i)).collect::<Option<_>>()?;
        let dims: Vec<usize> = pos.iter().map(|&p| self.dims[p]).collect();
        let n_out: usize = dims.iter().product();
        let n = self.dim();
        let mut rho = vec![C64::new(0.0, 0.0); n_out * n_out];
        let all: Vec<Vec<usize>> = (0..n).map(|i| digits(i, &self.dims)).collect();
        let traced: Vec<usize> = (0..self.dims.len()).filter(|k| !pos.contains(k)).collect();
        for a in 0..n {
            for b in 0..n {
                let (da, db) = (&all[a], &all[b]);
                if traced.iter().any(|&k| da[k] != db[k]) {
                    continue;
                }
                let ka: Vec<usize> = pos.iter().map(|&p| da[p]).collect();
                let kb: Vec<usize> = pos.iter().map(|&p| db[p]).collect();
                rho[flatten(&ka, &dims) * n_out + flatten(&kb, &dims)] += self.rho[a * n + b];
            }
        }
        Some(ReducedState {
            ions: keep.to_vec(),
            dims,
            rho,
        })
    }

    /// Outcome probabilities over `2^k` bit strings; a leaked ion reads as `0`.
    pub fn measured_populations(&self) -> Vec<f64> {
        let k = self.dims.len();
        let mut p = vec![0.0; 1 << k];
        for a in 0..self.dim() {
            let d = digits(a, &self.dims);
            let bits = d.iter().fold(0, |acc, &x| (acc << 1) | usize::from(x == 1));
            p[bits] += self.get(a, a).re;
        }
        p
    }

    /// Coherence between all-`0` and all-`1` of the listed ions, after tracing the rest.
    pub fn ghz_coherence(&self, ions: &[usize]) -> Option<C64> {
        let r = self.reduce(ions)?;
        let zeros = vec![0; ions.len()];
        let ones = vec![1; ions.len()];
        Some(r.get(flatten(&zeros, &r.dims), flatten(&ones, &r.dims)))
    }

    /// Embeds a state with leak levels into the qubit subspace by dropping leak rows.
    pub fn qubit_block(&self) -> ReducedState {
        let n = self.dim();
        let keep: Vec<usize> = (0..n)
            .filter(|&a| digits(a, &self.dims).iter().all(|&x| x < 2))
            .collect();
        let m = keep.len();
        let mut rho = vec![C64::new(0.0, 0.0); m * m];
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate() {
                rho[i * m + j] = self.rho[a * n + b];
            }
        }
        ReducedState {
            ions: self.ions.clone(),
            dims: vec![2; self.dims.len()],
            rho,
        }
    }

    /// Appends chain ions that were never driven, each in `|0⟩`. Ions already present are skipped.
    pub fn with_ground(&self, extra: &[usize]) -> ReducedState {
        let mut out = self.clone();
        for &ion in extra {
            if out.position(ion).is_some() {
                continue;
            }
            let n = out.dim();
            let mut rho = vec![C64::new(0.0, 0.0); 4 * n * n];
            for a in 0..n {
                for b in 0..n {
                    rho[(2 * a) * (2 * n) + 2 * b] = out.rho[a * n + b];
                }
            }
            out.ions.push(ion);
            out.dims.push(2);
            out.rho = rho;
        }
        out
    }

    pub fn pure(ions: Vec<usize>, psi: &[C64]) -> ReducedState {
        let n = psi.len();
        let mut rho = vec![C64::new(0.0, 0.0); n * n];
        for a in 0..n {
            for b in 0..n {
                rho[a * n + b] = psi[a] * psi[b].conj();
            }
        }
        let k = ions.len();
        ReducedState {
            ions,
            dims: vec![2; k],
            rho,
        }
    }
}

/// Thermal occupation probabilities `p_n` for `n < levels`, renormalized.
pub fn thermal_distribution(nbar: f64, levels: usize) -> Vec<f64> {
    if nbar <= 0.0 {
        let mut p = vec![0.0; levels];
        p[0] = 1.0;
        return p;
    }
    let r = nbar / (1.0 + nbar);
    let mut p: Vec<f64> = (0..levels).map(|n| r.powi(n as i32) / (1.0 + nbar)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_bell_pair() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [
            C64::new(h, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, -h),
        ];
        let s = ReducedState::pure(vec![0, 2], &psi);
        let one = s.reduce(&[2]).unwrap();
        assert!((one.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!(one.get(0, 1).norm() < 1e-15);
        assert!((s.ghz_coherence(&[0, 2]).unwrap() - C64::new(0.0, 0.5)).norm() < 1e-15);
        for (p, w) in s.measured_populations().iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((p - w).abs() < 1e-15);
        }
        assert!(s.reduce(&[1]).is_none());
        let wide = s.with_ground(&[1, 0]);
        assert_eq!(wide.ions, vec![0, 2, 1]);
        assert!((wide.reduce(&[1]).unwrap().get(0, 0).re - 1.0).abs() < 1e-15);
        assert!((wide.ghz_coherence(&[0, 2]).unwrap() - C64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((wide.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn leak_reads_as_zero() {
        let mut rho = vec![C64::new(0.0, 0.0); 9];
        rho[8] = C64::new(1.0, 0.0);
        let s = ReducedState {
            ions: vec![0],
            dims: vec![3],
            rho,
        };
        assert_eq!(s.measured_populations(), vec![1.0, 0.0]);
    }

    #[test]
    fn thermal_mean() {
        let p = thermal_distribution(0.5, 200);
        let mean: f64 = p.iter().enumerate().map(|(n, x)| n as f64 * x).sum();
        assert!((mean - 0.5).abs() < 1e-12);
    }
}
