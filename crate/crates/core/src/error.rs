use thiserror::Error;

/// Errors raised by liquid construction, simulation, learning and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("index {index} out of range for {context} of length {len}")]
    IndexOutOfRange {
        context: &'static str,
        index: usize,
        len: usize,
    },

    #[error("non-finite input value at position {0}")]
    NonFinite(usize),

    #[error("environment stepped after a terminal state; call reset first")]
    StepAfterTerminal,

    #[error("layout parse error at line {line}, column {column}: {message}")]
    Layout {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("eigenvalue iteration did not converge for eigenvalue {index} after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },

    #[error("matrix of order {order} exceeds the configured limit {limit}")]
    MatrixTooLarge { order: usize, limit: usize },

    #[error("model container: {0}")]
    Container(String),

    #[error("refusing to update the readout before warmup ({filled} of {warmup} transitions)")]
    Warmup { filled: usize, warmup: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
