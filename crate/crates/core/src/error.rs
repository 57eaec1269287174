use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied something outside an operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A constitutive model produced a value outside its declared bounds.
    #[error("model violation: {0}")]
    ModelViolation(String),

    /// Singular or non-finite linear system.
    #[error("solver fault: {0}")]
    SolverFault(String),

    /// An iteration ran out of budget; the residual history is attached.
    #[error("{solver} did not converge in {iterations} iterations (last residual {last_residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    /// Every violation found while validating a configuration.
    #[error("configuration rejected:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
