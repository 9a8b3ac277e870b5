//! Equilibrium geometry and axial normal modes of a linear Coulomb crystal.
//!
//! Positions are solved in units of the Coulomb length `ℓ`, where the
//! potential reads `V(u) = Σ u_i²/2 + Σ_{i<j} 1/|u_i − u_j|`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::constants::{ELEMENTARY_CHARGE, HBAR, VACUUM_PERMITTIVITY, YB171_MASS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub ion_count: usize,
    /// Axial trap frequency in rad/s.
    pub axial_freq: f64,
    /// Ion mass in kg.
    pub ion_mass: f64,
    /// Qubit transition wavelength in m. Informational only.
    pub qubit_wavelength: f64,
}

impl TrapConfig {
    /// A chain of 171Yb ions driven on the 435 nm quadrupole line.
    pub fn ytterbium(ion_count: usize, axial_freq: f64) -> Self {
        Self {
            ion_count,
            axial_freq,
            ion_mass: YB171_MASS,
            qubit_wavelength: 435.5e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ion_count == 0 {
            return Err(Error::InvalidConfig("ion_count must be at least 1".into()));
        }
        if !(self.axial_freq > 0.0 && self.axial_freq.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "axial_freq must be positive, got {}",
                self.axial_freq
            )));
        }
        if !(self.ion_mass > 0.0 && self.ion_mass.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "ion_mass must be positive, got {}",
                self.ion_mass
            )));
        }
        Ok(())
    }
}

/// Coulomb length scale `ℓ = (e² / (4πε₀ M ν²))^(1/3)`.
pub fn length_scale(trap: &TrapConfig) -> Result<f64> {
    trap.validate()?;
    let k = ELEMENTARY_CHARGE.powi(2) / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY);
    Ok((k / (trap.ion_mass * trap.axial_freq.powi(2))).cbrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonChain {
    /// Axial coordinates in m, ascending.
    pub positions: Vec<f64>,
    /// Coulomb length `ℓ` in m.
    pub length_scale: f64,
}

impl IonChain {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Positions in units of `ℓ`.
    pub fn dimensionless(&self) -> Vec<f64> {
        self.positions.iter().map(|z| z / self.length_scale).collect()
    }

    /// Smallest distance between neighbouring ions (m). Zero for a single ion.
    pub fn min_spacing(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        self.positions
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Gradient of the dimensionless potential.
pub fn potential_gradient(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut g = u.to_vec();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = u[i] - u[j];
                g[i] -= d.signum() / (d * d);
            }
        }
    }
    g
}

/// Dimensionless potential energy.
pub fn potential(u: &[f64]) -> f64 {
    let mut v: f64 = u.iter().map(|x| 0.5 * x * x).sum();
    for i in 0..u.len() {
        for j in (i + 1)..u.len() {
            v += 1.0 / (u[i] - u[j]).abs();
        }
    }
    v
}

/// Hessian of the dimensionless potential; its eigenvalues are `(ν_m/ν)²`.
pub fn hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 + (0..n)
                .filter(|&p| p != i)
                .map(|p| 2.0 / (u[i] - u[p]).abs().powi(3))
                .sum::<f64>()
        } else {
            -2.0 / (u[i] - u[j]).abs().powi(3)
        }
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton iteration on the dimensionless potential, then mirror-symmetrized.
pub fn solve_equilibrium(trap: &TrapConfig) -> Result<IonChain> {
    let ell = length_scale(trap)?;
    let n = trap.ion_count;
    let mid = (n as f64 - 1.0) / 2.0;
    let mut u: Vec<f64> = (0..n).map(|i| 2.0 * 0.63 * (i as f64 - mid)).collect();

    let mut residual = max_abs(&potential_gradient(&u));
    let mut iter = 0;
    while residual > 1e-13 && iter < 200 {
        iter += 1;
        let g = potential_gradient(&u);
        let h = hessian(&u);
        let step = h
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&g))
            .ok_or(Error::Numeric {
                what: "equilibrium Newton step",
                residual,
            })?;
        let v0 = potential(&u);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, s)| x - t * s).collect();
            let ordered = trial.windows(2).all(|w| w[1] > w[0]);
            if ordered && potential(&trial) <= v0 + 1e-15 * v0.abs() {
                u = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::Numeric {
                    what: "equilibrium line search",
                    residual,
                });
            }
        }
        residual = max_abs(&potential_gradient(&u));
    }

    // Exact mirror symmetry and zero centre of charge.
    let sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
    let residual = max_abs(&potential_gradient(&sym));
    if residual > 1e-10 {
        return Err(Error::Numeric {
            what: "equilibrium solver",
            residual,
        });
    }
    Ok(IonChain {
        positions: sym.iter().map(|x| x * ell).collect(),
        length_scale: ell,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    /// Mode angular frequencies in rad/s, ascending.
    pub frequencies: Vec<f64>,
    /// `eigenvectors[j][m]`: participation of ion `j` in mode `m`.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Zero-point extent `sqrt(ħ / (2 M ν_m))` per mode, in m.
    pub zero_point: Vec<f64>,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn b(&self, ion: usize, mode: usize) -> f64 {
        self.eigenvectors[ion][mode]
    }

    pub fn column(&self, mode: usize) -> Vec<f64> {
        self.eigenvectors.iter().map(|row| row[mode]).collect()
    }
}

/// Axial normal modes from the Hessian at equilibrium.
///
/// Each eigenvector's sign is fixed so that its last non-vanishing entry is positive.
pub fn normal_modes(chain: &IonChain, trap: &TrapConfig) -> Result<ModeSet> {
    trap.validate()?;
    if chain.len() != trap.ion_count {
        return Err(Error::InvalidArgument(format!(
            "chain has {} ions but trap expects {}",
            chain.len(),
            trap.ion_count
        )));
    }
    let n = chain.len();
    let eig = SymmetricEigen::new(hessian(&chain.dimensionless()));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut frequencies = Vec::with_capacity(n);
    let mut columns = Vec::with_capacity(n);
    for &k in &order {
        let lambda = eig.eigenvalues[k];
        if !(lambda > 0.0) {
            return Err(Error::UnstableConfiguration(format!(
                "Hessian eigenvalue {lambda:.3e} is not positive"
            )));
        }
        frequencies.push(trap.axial_freq * lambda.sqrt());
        let mut col: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let pivot = col.iter().rev().find(|x| x.abs() > 1e-9).copied().unwrap_or(1.0);
        if pivot < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
        columns.push(col);
    }
    let eigenvectors = (0..n).map(|j| columns.iter().map(|c| c[j]).collect()).collect();
    let zero_point = frequencies
        .iter()
        .map(|nu| (HBAR / (2.0 * trap.ion_mass * nu)).sqrt())
        .collect();
    Ok(ModeSet {
        frequencies,
        eigenvectors,
        zero_point,
    })
}

/// Solves the equilibrium and the normal modes in one call.
pub fn chain_and_modes(trap: &TrapConfig) -> Result<(IonChain, ModeSet)> {
    let chain = solve_equilibrium(trap)?;
    let modes = normal_modes(&chain, trap)?;
    Ok((chain, modes))
}

/// `η[j][m] = g_j · b[j][m] · z₀ₘ · κ`, with `κ` the beam's gradient wavenumber (1/m).
pub fn lamb_dicke_matrix(modes: &ModeSet, weights: &[f64], kappa: f64) -> Result<Vec<Vec<f64>>> {
    if weights.len() != modes.eigenvectors.len() {
        return Err(Error::InvalidArgument(format!(
            "{} gradient weights for {} ions",
            weights.len(),
            modes.eigenvectors.len()
        )));
    }
    if let Some(g) = weights.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "gradient weight {g} must be finite and non-negative"
        )));
    }
    Ok(weights
        .iter()
        .zip(&modes.eigenvectors)
        .map(|(g, row)| {
            row.iter()
                .zip(&modes.zero_point)
                .map(|(b, z0)| g * b * z0 * kappa)
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::mhz;

    fn yb(n: usize, f_mhz: f64) -> TrapConfig {
        TrapConfig::ytterbium(n, mhz(f_mhz))
    }

    #[test]
    fn length_scale_values() {
        let l = length_scale(&yb(3, 0.402)).unwrap();
        assert!((l - 5.03e-6).abs() < 0.01e-6, "{l}");
        let l = length_scale(&yb(3, 0.502)).unwrap();
        assert!((l - 4.33e-6).abs() < 0.01e-6, "{l}");
    }

    #[test]
    fn length_scale_power_law() {
        let a = length_scale(&yb(2, 0.3)).unwrap();
        let b = length_scale(&yb(2, 1.2)).unwrap();
        assert!((a / b - 4f64.powf(2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_trap() {
        let mut t = yb(3, 0.4);
        t.ion_mass = -1.0;
        assert!(matches!(length_scale(&t), Err(Error::InvalidConfig(_))));
        t = yb(0, 0.4);
        assert!(solve_equilibrium(&t).is_err());
        t = yb(2, 0.0);
        assert!(solve_equilibrium(&t).is_err());
    }

    #[test]
    fn single_and_pair() {
        let c = solve_equilibrium(&yb(1, 0.4)).unwrap();
        assert_eq!(c.positions, vec![0.0]);
        let c = solve_equilibrium(&yb(2, 0.4)).unwrap();
        let u = c.dimensionless();
        assert!((u[1] - 0.5f64.powf(2.0 / 3.0)).abs() < 1e-12);
        assert!((u[0] + u[1]).abs() < 1e-15);
    }

    #[test]
    fn three_ion_closed_form() {
        let c = solve_equilibrium(&yb(3, 0.402)).unwrap();
        let u = c.dimensionless();
        assert!((u[2] - 1.25f64.cbrt()).abs() < 1e-12);
        assert_eq!(u[1], 0.0);
    }

    #[test]
    fn breathing_is_sqrt3() {
        for n in 2..=8 {
            let (_, m) = chain_and_modes(&yb(n, 0.3)).unwrap();
            let nu = mhz(0.3);
            assert!((m.frequencies[0] / nu - 1.0).abs() < 1e-10);
            assert!((m.frequencies[1] / nu - 3f64.sqrt()).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn three_ion_third_mode() {
        let (_, m) = chain_and_modes(&yb(3, 0.402)).unwrap();
        assert!((m.frequencies[2] / mhz(0.402) - (29.0f64 / 5.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn com_vector_uniform() {
        let (_, m) = chain_and_modes(&yb(5, 0.3)).unwrap();
        for j in 0..5 {
            assert!((m.b(j, 0) - 1.0 / 5f64.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn lamb_dicke_zero_and_centre() {
        let (_, m) = chain_and_modes(&yb(3, 0.402)).unwrap();
        let eta = lamb_dicke_matrix(&m, &[0.0; 3], 1e6).unwrap();
        assert!(eta.iter().flatten().all(|x| *x == 0.0));
        let eta = lamb_dicke_matrix(&m, &[1.0; 3], 1e6).unwrap();
        assert!(eta[1][1].abs() < 1e-12);
        assert!(lamb_dicke_matrix(&m, &[1.0; 2], 1e6).is_err());
        assert!(lamb_dicke_matrix(&m, &[1.0, -1.0, 1.0], 1e6).is_err());
    }

    #[test]
    fn zero_point_scaling() {
        let (_, a) = chain_and_modes(&yb(1, 0.4)).unwrap();
        let (_, b) = chain_and_modes(&yb(1, 0.8)).unwrap();
        assert!((a.zero_point[0].powi(2) / b.zero_point[0].powi(2) - 2.0).abs() < 1e-12);
    }
}
