use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("invalid algebra parameter p = {0} (need p >= 2)")]
    InvalidParameter(u64),

    #[error("context mismatch: p = {left} vs p = {right}")]
    ContextMismatch { left: u32, right: u32 },

    #[error("expansion target {target} is below the current S*-power {current}")]
    BadTarget { target: u32, current: u32 },

    #[error("winding number {k} is not coprime with p = {p}")]
    NotCoprime { k: String, p: u32 },

    #[error("winding number must be nonzero")]
    ZeroWinding,

    #[error("value out of range: {0}")]
    Range(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("element is outside the expectation's domain: {0}")]
    NotInDomain(String),

    #[error("monomial is not in the image of the winding endomorphism: {0}")]
    NotInImage(String),

    #[error("grid of {grid_size} points is too coarse for epsilon = {epsilon}")]
    GridTooCoarse { grid_size: u64, epsilon: f64 },

    #[error("only {usable} usable points for the slope fit (need at least 3)")]
    InsufficientData { usable: usize },

    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("negative power of S at position {position}; write the adjoint S' explicitly")]
    NegativeSPower { position: usize },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("malformed JSON: {0}")]
    Json(String),
}

impl QpError {
    /// Stable variant name for machine-readable output.
    pub fn kind(&self) -> &'static str {
        match self {
            QpError::InvalidParameter(_) => "InvalidParameter",
            QpError::ContextMismatch { .. } => "ContextMismatch",
            QpError::BadTarget { .. } => "BadTarget",
            QpError::NotCoprime { .. } => "NotCoprime",
            QpError::ZeroWinding => "ZeroWinding",
            QpError::Range(_) => "RangeError",
            QpError::Dimension { .. } => "DimensionError",
            QpError::Precondition(_) => "PreconditionError",
            QpError::NotInDomain(_) => "NotInDomain",
            QpError::NotInImage(_) => "NotInImage",
            QpError::GridTooCoarse { .. } => "GridTooCoarse",
            QpError::InsufficientData { .. } => "InsufficientData",
            QpError::Syntax { .. } => "SyntaxError",
            QpError::NegativeSPower { .. } => "NegativeSPower",
            QpError::Internal(_) => "InternalError",
            QpError::Json(_) => "JsonError",
        }
    }
}

pub type Result<T, E = QpError> = std::result::Result<T, E>;
