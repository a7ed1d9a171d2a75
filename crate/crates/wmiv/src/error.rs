use thiserror::Error;

/// Errors surfaced by encoding, integration and verification.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty interval: lower bound {lo} exceeds upper bound {hi}")]
    EmptyInterval { lo: String, hi: String },

    #[error("integration region is unbounded in direction of variable {var}")]
    UnboundedRegion { var: String },

    #[error("conditioning event has zero mass")]
    NullCondition,

    #[error("precondition has zero mass under the given weight")]
    UnsatPrecondition,

    #[error("assignment does not determine weight condition {cond}")]
    IncompleteAssignment { cond: String },

    #[error("density tree leaf has zero-volume cell for variable {var}")]
    ZeroVolumeLeaf { var: String },

    #[error("invalid sum-product network: {0}")]
    InvalidSpn(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid model or task description: {0}")]
    Schema(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("group {0} has zero probability; parity ratio undefined")]
    EmptyGroup(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
