//! Adaptive Dormand–Prince 5(4) integrator for complex state vectors.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-11,
            max_steps: 1_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub struct Dopri5 {
    tol: Tolerances,
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    next: Vec<C64>,
    /// Step size carried over between calls.
    pub h: Option<f64>,
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl Dopri5 {
    pub fn new(n: usize, tol: Tolerances) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            tol,
            k: std::array::from_fn(|_| z.clone()),
            tmp: z.clone(),
            next: z,
            h: None,
            steps: 0,
            rejected: 0,
            evaluations: 0,
        }
    }

    fn combine(&mut self, y: &[C64], h: f64, coeffs: &[(usize, f64)]) {
        for (i, t) in self.tmp.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &(s, a) in coeffs {
                acc += self.k[s][i] * a;
            }
            *t = y[i] + acc * h;
        }
    }

    /// Advances `y` from `t0` to `t1` exactly.
    pub fn integrate<F>(&mut self, f: &mut F, t0: f64, t1: f64, y: &mut [C64]) -> Result<()>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        let mut t = t0;
        f(t, y, &mut self.k[0]);
        self.evaluations += 1;
        let mut h = match self.h {
            Some(h) => h.min(span),
            None => self.initial_step(y, span),
        };
        let mut local_steps = 0;
        while t < t1 {
            let proposed = h;
            let last = t + h >= t1 - 1e-12 * span;
            if last {
                h = t1 - t;
            }
            self.combine(y, h, &[(0, A21)]);
            f(t + C2 * h, &self.tmp, &mut self.k[1]);
            self.combine(y, h, &[(0, A31), (1, A32)]);
            f(t + C3 * h, &self.tmp, &mut self.k[2]);
            self.combine(y, h, &[(0, A41), (1, A42), (2, A43)]);
            f(t + C4 * h, &self.tmp, &mut self.k[3]);
            self.combine(y, h, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
            f(t + C5 * h, &self.tmp, &mut self.k[4]);
            self.combine(y, h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
            f(t + h, &self.tmp, &mut self.k[5]);
            self.combine(y, h, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)]);
            std::mem::swap(&mut self.tmp, &mut self.next);
            f(t + h, &self.next, &mut self.k[6]);
            self.evaluations += 6;

            let mut err = 0.0;
            for i in 0..y.len() {
                let e = (self.k[0][i] * E1
                    + self.k[2][i] * E3
                    + self.k[3][i] * E4
                    + self.k[4][i] * E5
                    + self.k[5][i] * E6
                    + self.k[6][i] * E7)
                    * h;
                let sc = self.tol.atol + self.tol.rtol * y[i].norm().max(self.next[i].norm());
                err += e.norm_sqr() / (sc * sc);
            }
            let err = (err / y.len() as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integrator(format!("non-finite error estimate at t = {t:.6e}")));
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                y.copy_from_slice(&self.next);
                self.k.swap(0, 6);
                self.steps += 1;
                h *= factor;
                self.h = Some(if last { proposed.max(h) } else { h });
            } else {
                self.rejected += 1;
                h *= factor.min(1.0);
            }
            local_steps += 1;
            if t < t1 && (local_steps > self.tol.max_steps || h < 1e-14 * span) {
                return Err(Error::Integrator(format!(
                    "step control failed at t = {t:.6e} (h = {h:.3e})"
                )));
            }
        }
        Ok(())
    }

    fn initial_step(&self, y: &[C64], span: f64) -> f64 {
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for (yi, fi) in y.iter().zip(&self.k[0]) {
            let sc = self.tol.atol + self.tol.rtol * yi.norm();
            d0 += yi.norm_sqr() / (sc * sc);
            d1 += fi.norm_sqr() / (sc * sc);
        }
        let (d0, d1) = ((d0 / y.len() as f64).sqrt(), (d1 / y.len() as f64).sqrt());
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span
        } else {
            0.01 * d0 / d1
        };
        h.min(span)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_rotation() {
        let w = 3.0;
        let mut y = vec![C64::new(1.0, 0.0)];
        let mut s = Dopri5::new(1, Tolerances::default());
        let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(0.0, -w) * y[0];
        let mut t = 0.0;
        for k in 1..=10 {
            let t1 = k as f64 * 0.7;
            s.integrate(&mut f, t, t1, &mut y).unwrap();
            t = t1;
        }
        let exact = C64::from_polar(1.0, -w * 7.0);
        assert!((y[0] - exact).norm() < 1e-7, "{}", (y[0] - exact).norm());
    }

    #[test]
    fn time_dependent_rhs() {
        // dy/dt = cos t → y = sin t.
        let mut y = vec![C64::new(0.0, 0.0)];
        let mut s = Dopri5::new(1, Tolerances::default());
        let mut f = |t: f64, _y: &[C64], dy: &mut [C64]| dy[0] = C64::new(t.cos(), 0.0);
        s.integrate(&mut f, 0.0, 2.0, &mut y).unwrap();
        // Global error is bounded by the step tolerance times the step count.
        assert!(
            (y[0].re - 2f64.sin()).abs() < 1e-7,
            "{} after {} steps",
            y[0].re,
            s.steps
        );
    }
}
