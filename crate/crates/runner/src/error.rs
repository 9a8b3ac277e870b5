use std::path::PathBuf;
use thiserror::Error;

/// Errors raised while parsing, running or emitting a scenario.
#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("config syntax: {0}")]
    Syntax(String),

    #[error("invalid config:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("{context}: {source}")]
    Core { context: String, source: hgsim_core::Error },

    #[error("scenario kind {found} does not match subcommand {expected}")]
    KindMismatch { expected: String, found: String },

    #[error("non-finite metric {0}")]
    NonFinite(String),

    #[error("serialization: {0}")]
    Serialize(String),
}

impl RunnerError {
    /// True for errors a user fixes by editing the config or command line.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            RunnerError::Syntax(_) | RunnerError::Validation(_) | RunnerError::KindMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, RunnerError>;

/// Attaches scenario context to core errors.
pub trait Context<T> {
    fn context(self, what: &str) -> Result<T>;
}

impl<T> Context<T> for hgsim_core::Result<T> {
    fn context(self, what: &str) -> Result<T> {
        self.map_err(|source| RunnerError::Core {
            context: what.to_string(),
            source,
        })
    }
}
