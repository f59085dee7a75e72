use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("unknown label `{label}` for variable `{variable}`")]
    UnknownLabel { variable: String, label: String },

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("variable sets overlap on `{0}`")]
    OverlappingSets(String),

    #[error("weights sum to {sum}, expected 1 within {tolerance:e}")]
    Normalization { sum: f64, tolerance: f64 },

    #[error("invalid weight {weight} (weights must be finite and non-negative)")]
    InvalidWeight { weight: f64 },

    #[error("assignment has {got} entries, distribution has {expected} variables")]
    AssignmentArity { expected: usize, got: usize },

    #[error("conditioning on an event of probability zero")]
    ZeroProbabilityEvidence,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed conditional distribution: {0}")]
    Validation(String),

    #[error(
        "acceptance probability below floor {floor:e}: {accepted} of {attempts} rounds accepted"
    )]
    AcceptanceFloor {
        floor: f64,
        accepted: u64,
        attempts: u64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
