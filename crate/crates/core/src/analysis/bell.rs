//! Bell-state fidelity from populations and parity contrast.

use crate::dynamics::state::ReducedState;
use crate::error::{Error, Result};

fn unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {x} outside [0, 1]")))
    }
}

/// `F = (P00 + P11 + C) / 2`.
pub fn bell_fidelity(p00: f64, p11: f64, contrast: f64) -> Result<f64> {
    unit("P00", p00)?;
    unit("P11", p11)?;
    unit("P00 + P11", p00 + p11)?;
    unit("contrast", contrast)?;
    Ok(0.5 * (p00 + p11 + contrast))
}

/// `F = (P + C) / 2` with `P = P00 + P11`.
pub fn bell_fidelity_from_sum(population: f64, contrast: f64) -> Result<f64> {
    unit("P00 + P11", population)?;
    unit("contrast", contrast)?;
    Ok(0.5 * (population + contrast))
}

/// Measured Bell fidelity of two chain ions: populations with leak read as `0`,
/// contrast `C = 2|ρ_{00,11}|` (the amplitude of the parity oscillation).
pub fn pair_bell_fidelity(state: &ReducedState, a: usize, b: usize) -> Result<f64> {
    let pair = state
        .reduce(&[a, b])
        .ok_or_else(|| Error::InvalidArgument(format!("ions ({a}, {b}) not in the state")))?;
    let p = pair.measured_populations();
    let c = 2.0 * pair.ghz_coherence(&[a, b]).expect("pair present").norm();
    Ok(0.5 * ((p[0] + p[3]).clamp(0.0, 1.0) + c.min(1.0)))
}
