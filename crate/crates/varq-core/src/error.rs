//! Shared error type for the whole crate.

use crate::spaces::Space;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two vectors (or a vector and an operator input) live in different spaces.
    #[error("space mismatch: {left} vs {right}")]
    SpaceMismatch { left: Space, right: Space },

    /// A parameter is outside its mathematical domain (q < 1, t ≤ 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An input exceeds a hard enumeration guard (2^J subsets, 2^m atoms, ...).
    #[error("size error: {0}")]
    Size(String),

    /// Evaluation requested at a genuine singularity.
    #[error("singularity at x = {x}: {message}")]
    Singularity { x: f64, message: String },

    /// Degenerate input for which the requested quantity is undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Adaptive quadrature did not converge within its subdivision budget.
    #[error("quadrature did not converge: {message} (achieved estimate {estimate})")]
    Quadrature { message: String, estimate: f64 },

    /// A double-grid (Richardson) agreement gate failed.
    #[error("resolution insufficient: {message} (coarse {coarse}, fine {fine})")]
    Resolution {
        message: String,
        coarse: f64,
        fine: f64,
    },

    /// A certified search ran out of floating-point room or iterations.
    #[error("precision error: {0}")]
    Precision(String),

    /// Malformed configuration or input file.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 validation, 2 is reserved for
    /// identity/acceptance failures (not errors), 3 resolution/precision.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Quadrature { .. }
            | Error::Resolution { .. }
            | Error::Precision(_) => 3,
            _ => 1,
        }
    }
}
