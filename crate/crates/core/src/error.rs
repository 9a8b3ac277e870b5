use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} did not converge (residual {residual:.3e})")]
    Numeric { what: &'static str, residual: f64 },

    #[error("unstable configuration: {0}")]
    UnstableConfiguration(String),

    #[error("Fock cutoff {cutoff} too small: population {edge_population:.3e} near the edge")]
    Truncation { cutoff: usize, edge_population: f64 },

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("degenerate gate: accumulated two-qubit phase is zero")]
    DegenerateGate,

    #[error("fit failed: {reason} (residual {residual:.3e})")]
    Fit { reason: String, residual: f64 },

    #[error("ill-conditioned detection model: {0}")]
    Conditioning(String),

    #[error("size guard tripped: {0}")]
    SizeGuard(String),
}

pub type Result<T> = std::result::Result<T, Error>;
