use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("parse error at position {pos}: {message}")]
    Parse { pos: usize, message: String },

    #[error("unknown symbol `{name}` at position {pos}")]
    UnknownSymbol { name: String, pos: usize },

    #[error("invalid identifier `{name}`")]
    InvalidIdentifier { name: String },

    #[error("duplicate symbol `{name}`")]
    DuplicateSymbol { name: String },

    #[error("`{name}` is not a coordinate of this context")]
    NotACoordinate { name: String },

    #[error("expressions belong to different contexts")]
    ContextMismatch,

    #[error("division by a symbolically zero expression")]
    DivisionByZero,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("symbol `{0}` has no assigned value")]
    Unassigned(String),

    #[error("only {valid} of {required} required sample points were valid")]
    InsufficientSamples { valid: usize, required: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is symbolically singular")]
    SingularMatrix,

    #[error("frame is degenerate: {0}")]
    DegenerateFrame(String),

    #[error("frame is not adapted: {0}")]
    NotAdapted(String),

    #[error("structural exponential failed on block {block:?}: {reason}")]
    StructuralExp { block: Vec<usize>, reason: String },

    #[error("twist map has no symbolic matrix (numeric-only mode): {0}")]
    NotSymbolic(String),

    #[error("check `{check}` failed: {detail}")]
    CheckFailed { check: String, detail: String },

    #[error("{0}")]
    Input(String),
}
