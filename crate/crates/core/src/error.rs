use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tensor shape: dim = {dim}, depth = {depth}")]
    InvalidShape { dim: usize, depth: usize },

    #[error("shape mismatch: (dim {0}, depth {1}) vs (dim {2}, depth {3})")]
    ShapeMismatch(usize, usize, usize, usize),

    #[error("level {level} has {found} coefficients, expected {expected}")]
    LevelLength {
        level: usize,
        expected: usize,
        found: usize,
    },

    #[error("level-0 coefficient must be {expected}, found {found}")]
    ScalarPart { expected: f64, found: f64 },

    #[error("non-finite coefficient at flat position {0}")]
    NonFinite(usize),

    #[error("forward update produced a non-finite control or state at grid node {node}")]
    Diverged { node: usize },

    #[error("element is not group-like: deviation {deviation:e} exceeds {tol:e}")]
    NotGroupLike { deviation: f64, tol: f64 },

    #[error("letter {letter} out of range for dimension {dim}")]
    LetterOutOfRange { letter: usize, dim: usize },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid controls: {0}")]
    InvalidControls(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("costate fixed-point iteration did not contract at node {node}: last change {change:e} after {iterations} iterations")]
    NonContraction {
        node: usize,
        change: f64,
        iterations: usize,
    },

    #[error("target not reached after {expansions} horizon expansions (last horizon {last_horizon}, endpoint error {last_error:e})")]
    Unreachable {
        expansions: usize,
        last_horizon: f64,
        last_error: f64,
    },

    #[error("{location}: {message}")]
    Format { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            location: location.into(),
            message: message.into(),
        }
    }
}
