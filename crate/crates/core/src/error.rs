use thiserror::Error;

/// Errors produced by the detection toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is rank deficient (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("selected atoms {support:?} form a numerically singular system (condition estimate {condition:.3e})")]
    SingularSupport { support: Vec<usize>, condition: f64 },

    #[error("solver did not converge after {iterations} iterations (last objective {last_objective:.6e})")]
    NotConverged {
        iterations: usize,
        last_objective: f64,
    },

    #[error("exhaustive search needs {combinations} supports, budget is {budget}")]
    BudgetExceeded { combinations: u128, budget: u128 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("decision threshold has not been calibrated")]
    UncalibratedThreshold,

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("unsupported WAV file: {0}")]
    UnsupportedWav(String),

    #[error("WAV decoding failed: {0}")]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
