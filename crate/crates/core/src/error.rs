use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph spec: {0}")]
    InvalidSpec(String),

    #[error("noise coefficient must be positive, got {0}")]
    InvalidNoise(f64),

    #[error("leader count {n_l} out of range for {n} vertices (need 1 <= n_l < n)")]
    LeaderCount { n_l: usize, n: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("numerical solve failed: {0}")]
    NumericalFailure(String),

    #[error("controllability Gramian is numerically singular (reciprocal condition {rcond:e})")]
    SingularGramian { rcond: f64 },

    #[error("steering horizon must be positive, got {0}")]
    InvalidHorizon(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no controllable input matrix with at most {max_m} columns on the grid [-{grid}, {grid}]")]
    NoControllableInput { max_m: usize, grid: i64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
