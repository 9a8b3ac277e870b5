//! Simulation core for a linear ion chain addressed by Hermite-Gaussian beams.
//!
//! - [`chain`]: equilibrium positions and axial normal modes.
//! - [`optics`]: transverse field models and ion-site couplings.
//! - [`dynamics`]: phase-space gate analytics and the master-equation solver.
//! - [`analysis`]: fits, detection correction and error budgets.

// Negated comparisons reject NaN on purpose; index loops mirror the matrix formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod chain;
pub mod constants;
pub mod dynamics;
mod error;
pub mod exec;
pub mod optics;

pub use error::{Error, Result};
