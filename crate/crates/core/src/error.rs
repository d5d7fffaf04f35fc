use thiserror::Error;

/// Errors raised by the operator algebra, the entropy functionals, the
/// equilibrium solver and the metric code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has dimension 0")]
    EmptyMatrix,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("not Hermitian: entry ({row}, {col}) deviates from the conjugate of ({col}, {row}) by {deviation:e}")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("not positive semi-definite: eigenvalue {index} is {value:e}")]
    NotPositive { index: usize, value: f64 },

    #[error("trace is {trace} (deviation {deviation:e} from 1)")]
    InvalidTrace { trace: f64, deviation: f64 },

    #[error("eigenvectors are not orthonormal (deviation {0:e})")]
    NotUnitary(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("solver did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        /// Probabilities of the last iterate in the Hamiltonian eigenbasis.
        last_probabilities: Vec<f64>,
    },

    #[error("metric is singular: branch {branch} has probability {probability:e} below the floor")]
    SingularMetric { branch: usize, probability: f64 },

    #[error("ambiguous eigenbranch tracking between grid points {0} and {1}")]
    AmbiguousTracking(usize, usize),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error(
        "grid index {index} out of range for a stencil of half-width {half_width} on {len} points"
    )]
    GridIndex {
        index: usize,
        half_width: usize,
        len: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
