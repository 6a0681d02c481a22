use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree {degree} out of range for dimension {dim}")]
    DegreeOutOfRange { degree: usize, dim: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trace mismatch: sum(a) = {a}, sum(b) = {b}")]
    TraceMismatch { a: f64, b: f64 },

    #[error("flow overflow: |t| * max exponent = {0} exceeds 500")]
    FlowOverflow(f64),

    #[error("lattice enumeration budget exceeded ({0} candidates); renormalize the basis")]
    EnumerationBudget(u64),

    #[error("point outside I^m: {0}")]
    OutsideBox(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("vector is not dominated: {0}")]
    NotDominated(String),

    #[error("inadmissible root system {family}{rank}")]
    Inadmissible { family: String, rank: usize },

    #[error("decomposition branch {branch} failed: {detail}")]
    BranchFailure { branch: &'static str, detail: String },

    #[error("singular matrix")]
    Singular,

    #[error("box too small: {0}")]
    BoxTooSmall(String),

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("falsified inequality: {0}")]
    Falsified(String),
}

pub type Result<T> = std::result::Result<T, Error>;
