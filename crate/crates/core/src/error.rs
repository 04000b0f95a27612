use thiserror::Error;

/// Errors raised by the sampling, transport and optimization routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("brute-force oracle supports at most {limit} points, got {got}")]
    SizeLimit { limit: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rejection sampler exceeded {0} proposals")]
    RejectionLimit(usize),

    #[error("cannot project a vector of norm {0:e} onto the sphere")]
    Projection(f64),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("unsupported ground-cost exponent r = {0} (gradient requires r = 2)")]
    UnsupportedExponent(u32),

    #[error("non-finite value encountered at step {step}")]
    Divergence { step: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("line {line}: expected {expected} columns, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. }
                | Error::RejectionLimit(_)
                | Error::Quadrature(_)
                | Error::Projection(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
