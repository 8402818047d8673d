use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("grid configuration error: {0}")]
    Config(String),

    #[error("degenerate scale factor (a = 0)")]
    DegenerateScale,

    #[error("grid resolution error: {0}")]
    Resolution(String),

    #[error("score undefined: {0}")]
    ScoreUndefined(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid collection: {0}")]
    Collection(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
