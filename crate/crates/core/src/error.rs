//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix structure: {0}")]
    Structure(String),

    #[error("entry ({row}, {col}) is outside the declared {n_rows}x{n_cols} shape")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("latitude {phi} rad is outside the open interval (-pi/2, pi/2)")]
    LatitudeDomain { phi: f64 },

    #[error("singular preconditioner: matrix diagonal at row {row} is zero or negative")]
    SingularDiagonal { row: usize },

    #[error("matrix is not positive definite: pivot {index} is non-positive")]
    NotPositiveDefinite { index: usize },

    #[error(
        "orthogonalization breakdown at column {column}: non-positive pivot; \
         dropped fill can destroy positivity, so loosening the drop rule is not \
         guaranteed to help"
    )]
    Breakdown { column: usize },

    #[error("numerical breakdown at iteration {iteration}: {msg}")]
    NumericalBreakdown { iteration: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "surface step {step} did not converge: relative residual {residual:e} \
         after {iterations} iterations"
    )]
    StepDidNotConverge {
        step: usize,
        iterations: usize,
        residual: f64,
    },
}
