use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("length mismatch: expected {expected} samples, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("frequency out of range: omega = {omega} must exceed omega_alpha = {omega_alpha}")]
    FrequencyOutOfRange { omega: f64, omega_alpha: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("solver did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
        /// Last iterate of the regular part, kept for diagnostics.
        last_iterate: LastIterate,
    },

    #[error("malformed record: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Samples of a failed solve's final iterate; `Debug` prints only the length.
#[derive(Clone, PartialEq)]
pub struct LastIterate(pub Vec<f64>);

impl std::fmt::Debug for LastIterate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LastIterate({} samples)", self.0.len())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
