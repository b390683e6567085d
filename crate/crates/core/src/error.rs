use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("instance parse error: {0}")]
    Parse(String),

    #[error("metric violation on ({}): {reason}", .points.join(", "))]
    MetricViolation { points: Vec<String>, reason: String },

    #[error("candidates {0} and {1} occupy the same point")]
    DuplicateCandidatePoint(String, String),

    #[error("unknown point id `{0}`")]
    UnknownId(String),

    #[error("`{0}` is not a candidate")]
    NotACandidate(String),

    #[error("pairwise comparison needs two distinct candidates, got `{0}` twice")]
    SameCandidate(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),

    #[error("tally does not match the rule: expected {expected}, found {found}")]
    SchemeMismatch { expected: String, found: String },

    #[error("distortion {delta} is not a valid distortion value (pole at {pole})")]
    PoleViolation { delta: f64, pole: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}
