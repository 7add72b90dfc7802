use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("position {xi} outside the beam domain [0, {length}]")]
    Domain { xi: f64, length: f64 },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid beam parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("structural mismatch: {0}")]
    Structure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no feasible weights found; blocking constraint {blocking}")]
    FeasibilityNotFound { blocking: crate::certificate::Constraint },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
