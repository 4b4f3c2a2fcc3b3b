use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("algebra spec mismatch: {0} vs {1}")]
    SpecMismatch(String, String),
    #[error("not a unit: body is zero")]
    NotAUnit,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("singular block: {0}")]
    SingularBlock(String),
    #[error("non-invertible differential: {0}")]
    NonInvertibleDifferential(String),
    #[error("inconsistent base point: residual {0:.3e}")]
    InconsistentBase(f64),
    #[error("format error: {0}")]
    Format(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("word resolution failed: {0}")]
    Resolution(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("lift failed at level {level}: residual {residual:.3e}, min singular value {min_singular:.3e}")]
    LiftFailure {
        level: usize,
        residual: f64,
        min_singular: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
