use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("loss value {value} for expert {expert} at round {round} is outside [0, 1]")]
    LossOutOfRange { round: usize, expert: usize, value: f64 },

    #[error("expected {expected} experts, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("expert {index} out of range for K = {k}")]
    ExpertOutOfRange { index: usize, k: usize },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("malformed trace round {round}: {reason}")]
    MalformedTrace { round: usize, reason: String },

    #[error("learner protocol violation: {0}")]
    Protocol(&'static str),

    #[error("oracle starved: every expert would be inactive after round {round}")]
    OracleStarved { round: usize },

    #[error("operation requires an oblivious loss stream")]
    AdaptiveStream,

    #[error("infeasible adversary: {0}")]
    Infeasible(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
