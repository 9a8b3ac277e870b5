//! State fidelity between density matrices.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::dynamics::state::ReducedState;
use crate::error::{Error, Result};

fn hermitian(s: &ReducedState) -> DMatrix<C64> {
    let n = s.dim();
    DMatrix::from_fn(n, n, |r, c| 0.5 * (s.get(r, c) + s.get(c, r).conj()))
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`.
pub fn uhlmann_fidelity(rho: &ReducedState, sigma: &ReducedState) -> Result<f64> {
    if rho.dims != sigma.dims {
        return Err(Error::InvalidArgument(format!(
            "state dimensions differ: {:?} vs {:?}",
            rho.dims, sigma.dims
        )));
    }
    let eig = hermitian(rho).symmetric_eigen();
    let sqrt_vals = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0)));
    let v = &eig.eigenvectors;
    let root = v * sqrt_vals * v.adjoint();
    let inner = &root * hermitian(sigma) * &root;
    let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let s: f64 = inner.symmetric_eigenvalues().iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((s * s).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixed(p: f64) -> ReducedState {
        let mut rho = vec![C64::new(0.0, 0.0); 4];
        rho[0] = C64::new(p, 0.0);
        rho[3] = C64::new(1.0 - p, 0.0);
        ReducedState {
            ions: vec![0],
            dims: vec![2],
            rho,
        }
    }

    #[test]
    fn known_values() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ReducedState::pure(vec![0], &[C64::new(h, 0.0), C64::new(0.0, h)]);
        assert!((uhlmann_fidelity(&plus, &plus).unwrap() - 1.0).abs() < 1e-12);
        // ⟨ψ|σ|ψ⟩ for a pure argument.
        assert!((uhlmann_fidelity(&plus, &mixed(0.3)).unwrap() - 0.5).abs() < 1e-12);
        // Commuting states: (Σ √(p q))².
        let f = uhlmann_fidelity(&mixed(0.3), &mixed(0.6)).unwrap();
        let want = ((0.3f64 * 0.6).sqrt() + (0.7f64 * 0.4).sqrt()).powi(2);
        assert!((f - want).abs() < 1e-12);
        let two = ReducedState::pure(vec![0, 1], &[C64::new(1.0, 0.0); 4].map(|x| x * 0.5));
        assert!(uhlmann_fidelity(&plus, &two).is_err());
    }
}
