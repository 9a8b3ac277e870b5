//! Per-gate error from fidelity decay under repeated gates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateErrorFit {
    /// `ε = −dF/dn` from a weighted straight line.
    pub linear: f64,
    pub linear_err: f64,
    /// Fidelity extrapolated to zero gates.
    pub intercept: f64,
    /// `ε` from `F = ½ + A (1 − 2ε)^n`; absent when some `F ≤ ½`.
    pub exponential: Option<f64>,
    pub exponential_err: Option<f64>,
}

/// Weighted straight-line fit; returns `(a, b, σ_a, σ_b)` for `y = a + b x`.
fn line(x: &[f64], y: &[f64], w: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let sw: f64 = w.iter().sum();
    let sx: f64 = x.iter().zip(w).map(|(x, w)| w * x).sum();
    let sy: f64 = y.iter().zip(w).map(|(y, w)| w * y).sum();
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| w * x * x).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((x, y), w)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    if det.abs() <= 1e-12 * sw * sxx {
        return Err(Error::Fit {
            reason: "gate counts are degenerate".into(),
            residual: f64::NAN,
        });
    }
    let b = (sw * sxy - sx * sy) / det;
    let a = (sy - b * sx) / sw;
    // Scale the covariance by the reduced chi-square so unit weights give empirical errors.
    let chi2: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((x, y), w)| w * (y - a - b * x).powi(2))
        .sum();
    let s2 = chi2 / (x.len() - 2) as f64;
    Ok((a, b, (s2 * sxx / det).sqrt(), (s2 * sw / det).sqrt()))
}

/// Fits fidelity versus (odd) gate count; `sigma` are optional per-point standard errors.
pub fn error_per_gate(counts: &[usize], fidelity: &[f64], sigma: Option<&[f64]>) -> Result<GateErrorFit> {
    let n = counts.len();
    if n != fidelity.len() || sigma.is_some_and(|s| s.len() != n) {
        return Err(Error::InvalidArgument(
            "gate counts, fidelities and errors differ in length".into(),
        ));
    }
    if n < 3 {
        return Err(Error::Fit {
            reason: format!("{n} points; at least 3 gate counts needed"),
            residual: f64::NAN,
        });
    }
    if fidelity.iter().any(|f| !f.is_finite()) {
        return Err(Error::InvalidArgument("non-finite fidelity".into()));
    }
    let w: Vec<f64> = match sigma {
        Some(s) if s.iter().all(|x| *x > 0.0 && x.is_finite()) => s.iter().map(|x| 1.0 / (x * x)).collect(),
        Some(_) => return Err(Error::InvalidArgument("fidelity errors must be positive".into())),
        None => vec![1.0; n],
    };
    let x: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
    let (a, b, _, sb) = line(&x, fidelity, &w)?;
    let (exponential, exponential_err) = if fidelity.iter().all(|f| *f > 0.5) {
        let ly: Vec<f64> = fidelity.iter().map(|f| (f - 0.5).ln()).collect();
        // Var(ln(F − ½)) = σ² / (F − ½)².
        let lw: Vec<f64> = w.iter().zip(fidelity).map(|(w, f)| w * (f - 0.5).powi(2)).collect();
        let (_, r, _, sr) = line(&x, &ly, &lw)?;
        (Some(0.5 * (1.0 - r.exp())), Some(0.5 * r.exp() * sr))
    } else {
        (None, None)
    };
    Ok(GateErrorFit {
        linear: -b,
        linear_err: sb,
        intercept: a,
        exponential,
        exponential_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn odd(k: usize) -> Vec<usize> {
        (0..k).map(|i| 2 * i + 1).collect()
    }

    #[test]
    fn recovers_synthetic_decay() {
        for eps in [0.035, 0.028] {
            let n = odd(5);
            // Small-error regime: fidelity drops by ε per gate, with ±0.002 scatter.
            let f: Vec<f64> = n
                .iter()
                .enumerate()
                .map(|(i, &k)| 0.975 - eps * (k - 1) as f64 + 0.002 * [1.0, -1.0, 0.5, -0.5, 0.0][i])
                .collect();
            let fit = error_per_gate(&n, &f, None).unwrap();
            assert!((fit.linear - eps).abs() < 0.002, "{} vs {eps}", fit.linear);
            let g: Vec<f64> = n
                .iter()
                .map(|&k| 0.5 + 0.49 * (1.0 - 2.0 * eps).powi(k as i32))
                .collect();
            let fit = error_per_gate(&n, &g, None).unwrap();
            assert!((fit.exponential.unwrap() - eps).abs() < 1e-12);
        }
        let line: Vec<f64> = odd(6).iter().map(|&k| 0.99 - 0.03 * k as f64).collect();
        let fit = error_per_gate(&odd(6), &line, Some(&[0.01; 6])).unwrap();
        assert!((fit.linear - 0.03).abs() < 1e-12 && (fit.intercept - 0.99).abs() < 1e-12);
        assert!(fit.linear_err < 1e-9);
    }

    #[test]
    fn constant_and_degenerate() {
        let fit = error_per_gate(&odd(4), &[1.0; 4], None).unwrap();
        assert_eq!(fit.linear, 0.0);
        assert_eq!(fit.exponential, Some(0.0));
        assert!(error_per_gate(&[1, 3], &[0.9, 0.8], None).is_err());
        assert!(error_per_gate(&[3, 3, 3], &[0.9, 0.8, 0.7], None).is_err());
        assert!(error_per_gate(&odd(3), &[0.4, 0.3, 0.2], None)
            .unwrap()
            .exponential
            .is_none());
    }
}
