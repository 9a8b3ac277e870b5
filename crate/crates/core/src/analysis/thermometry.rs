//! Mean phonon number and sideband Rabi frequency from a blue-sideband flop.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{storage::Owned, DVector, Dyn, Matrix2, OMatrix, Vector2, U2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhononFit {
    pub nbar: f64,
    pub nbar_err: f64,
    /// Ground-state blue-sideband Rabi frequency, rad/s.
    pub omega: f64,
    pub omega_err: f64,
    pub residual_rms: f64,
}

/// Levels needed for the thermal tail to fall below `1e-12`.
fn levels(nbar: f64) -> usize {
    if nbar <= 0.0 {
        return 1;
    }
    let q = nbar / (nbar + 1.0);
    ((-12.0 * std::f64::consts::LN_10) / q.ln()).ceil().max(1.0) as usize + 1
}

/// `P₁(t) = Σ p_n(n̄) sin²(Ω √(n+1) t / 2)` with its derivatives in `n̄` and `Ω`.
fn model(nbar: f64, omega: f64, t: f64) -> (f64, f64, f64) {
    let (mut p, mut dn, mut dw) = (0.0, 0.0, 0.0);
    let r = 1.0 / (nbar + 1.0);
    let mut pn = r;
    for n in 0..levels(nbar) {
        let s = ((n + 1) as f64).sqrt();
        let phase = omega * s * t;
        let sin2 = (0.5 * phase).sin().powi(2);
        // d p_n / d n̄ = p_n (n / n̄ − (n + 1) / (n̄ + 1)), written without the 1/n̄.
        let dpn = if n == 0 {
            -r * r
        } else {
            nbar.powi(n as i32 - 1) * (n as f64 - nbar) * r.powi(n as i32 + 2)
        };
        p += pn * sin2;
        dn += dpn * sin2;
        dw += pn * 0.5 * phase.sin() * s * t;
        pn *= nbar * r;
    }
    (p, dn, dw)
}

struct Flop<'a> {
    times: &'a [f64],
    data: &'a [f64],
    /// `[u, w]` with `n̄ = u²` and `Ω = w · scale`.
    params: Vector2<f64>,
    scale: f64,
}

impl LeastSquaresProblem<f64, Dyn, U2> for Flop<'_> {
    type ParameterStorage = Owned<f64, U2>;
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U2>;

    fn set_params(&mut self, x: &Vector2<f64>) {
        self.params = *x;
    }

    fn params(&self) -> Vector2<f64> {
        self.params
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let (u, w) = (self.params[0], self.params[1]);
        Some(DVector::from_iterator(
            self.times.len(),
            self.times
                .iter()
                .zip(self.data)
                .map(|(&t, &y)| model(u * u, w * self.scale, t).0 - y),
        ))
    }

    fn jacobian(&self) -> Option<OMatrix<f64, Dyn, U2>> {
        let (u, w) = (self.params[0], self.params[1]);
        let mut j = OMatrix::<f64, Dyn, U2>::zeros(self.times.len());
        for (i, &t) in self.times.iter().enumerate() {
            let (_, dn, dw) = model(u * u, w * self.scale, t);
            j[(i, 0)] = dn * 2.0 * u;
            j[(i, 1)] = dw * self.scale;
        }
        Some(j)
    }
}

fn sse(times: &[f64], data: &[f64], nbar: f64, omega: f64) -> f64 {
    times
        .iter()
        .zip(data)
        .map(|(&t, &y)| (model(nbar, omega, t).0 - y).powi(2))
        .sum()
}

/// Fits the thermal blue-sideband model to `P₁(t)`.
///
/// Without a starting guess, a coarse grid over `Ω ∈ (0, 40π/t_max]` and a few `n̄`
/// values seeds the least-squares refinement. `n̄` is constrained to be non-negative.
pub fn fit_phonon_number(times: &[f64], p1: &[f64], guess: Option<(f64, f64)>) -> Result<PhononFit> {
    let m = times.len();
    if m != p1.len() {
        return Err(Error::InvalidArgument(format!(
            "{m} times but {} populations",
            p1.len()
        )));
    }
    if m < 4 || times.iter().chain(p1).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "sideband fit needs at least 4 finite samples".into(),
        ));
    }
    let t_max = times.iter().copied().fold(0.0, f64::max);
    if t_max <= 0.0 {
        return Err(Error::InvalidArgument("sideband fit needs positive times".into()));
    }
    let (nbar0, omega0) = match guess {
        Some(g) => g,
        None => {
            let mut best = (f64::INFINITY, 0.0, 0.0);
            for k in 1..=800 {
                let omega = 40.0 * std::f64::consts::PI / t_max * k as f64 / 800.0;
                for nbar in [0.0, 0.1, 0.5, 2.0] {
                    let e = sse(times, p1, nbar, omega);
                    if e < best.0 {
                        best = (e, nbar, omega);
                    }
                }
            }
            (best.1, best.2)
        }
    };
    let problem = Flop {
        times,
        data: p1,
        params: Vector2::new(nbar0.max(1e-3).sqrt(), 1.0),
        scale: omega0,
    };
    let (fitted, report) = LevenbergMarquardt::new().with_patience(400).minimize(problem);
    let (u, w) = (fitted.params[0], fitted.params[1]);
    let (nbar, omega) = (u * u, w * omega0);
    let rss = sse(times, p1, nbar, omega);
    if !report.termination.was_successful() || !rss.is_finite() {
        return Err(Error::Fit {
            reason: format!("sideband fit did not converge: {:?}", report.termination),
            residual: (rss / m as f64).sqrt(),
        });
    }
    // Covariance in (n̄, Ω) from the model Jacobian at the optimum.
    let mut jtj = Matrix2::zeros();
    for &t in times {
        let (_, dn, dw) = model(nbar, omega, t);
        let g = Vector2::new(dn, dw);
        jtj += g * g.transpose();
    }
    let s2 = if m > 2 { rss / (m - 2) as f64 } else { 0.0 };
    let (nbar_err, omega_err) = match jtj.try_inverse() {
        Some(c) => ((s2 * c[(0, 0)]).max(0.0).sqrt(), (s2 * c[(1, 1)]).max(0.0).sqrt()),
        None => (f64::NAN, f64::NAN),
    };
    Ok(PhononFit {
        nbar,
        nbar_err,
        omega,
        omega_err,
        residual_rms: (rss / m as f64).sqrt(),
    })
}
