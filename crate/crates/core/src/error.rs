use thiserror::Error;

/// Errors raised by the loop-space solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("loop needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("degenerate (zero-length) loop")]
    DegenerateLoop,
    #[error("loops share no common vertex")]
    NotConcatenable,
    #[error("loops are not compatible: {0}")]
    IncompatibleLoops(String),
    #[error("no loop with negative action found: {0}")]
    NoNegativeLoopFound(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid loop family: {0}")]
    InvalidFamily(String),
    #[error("invalid oracle input: {0}")]
    InvalidOracleInput(String),
    #[error("loop file: {0}")]
    LoopFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
