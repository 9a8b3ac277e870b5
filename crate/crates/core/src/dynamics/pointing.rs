//! Quasi-static beam pointing offsets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::optics::{field_gradient, BeamProfile};

/// Per-shot drive multipliers `E'(−dz)/E'(0)` for each target, with `dz ~ N(0, σ²)`
/// drawn independently per beam.
pub fn pointing_scales(
    beam: &BeamProfile,
    sigma: f64,
    targets: usize,
    shots: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(format!("pointing sigma {sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g0 = field_gradient(beam, beam.center);
    Ok((0..shots)
        .map(|_| {
            (0..targets)
                .map(|_| {
                    let dz: f64 = normal.sample(&mut rng);
                    field_gradient(beam, beam.center - dz) / g0
                })
                .collect()
        })
        .collect())
}
