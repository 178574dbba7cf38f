use thiserror::Error;

/// Errors raised anywhere in the testing pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter constraint violated: {0}")]
    Constraint(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("model family {0} has no residual link")]
    UnsupportedFamily(&'static str),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("degenerate innovation pool: {0}")]
    DegeneratePool(String),

    #[error("empty sample: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "bootstrap resample {resample} could not be refitted after {attempts} attempts: {last}"
    )]
    RefitExhausted {
        resample: usize,
        attempts: usize,
        last: String,
    },

    #[error("monte carlo run aborted: {failed} of {total} replications failed ({first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
