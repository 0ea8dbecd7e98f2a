use thiserror::Error;

/// Errors raised by the simulation and optimization routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("site count must be at least {min}, got {got}")]
    TooFewSites { min: usize, got: usize },

    #[error("site count must be even, got {0}")]
    OddSiteCount(usize),

    #[error("Majorana index {index} out of range for {n_modes} modes")]
    IndexOutOfRange { index: usize, n_modes: usize },

    #[error("site index {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("indices must be distinct, got ({0}, {0})")]
    RepeatedIndex(usize),

    #[error("invalid mode subset: {0}")]
    InvalidSubset(String),

    #[error("matrix of shape {rows}x{cols} is not a valid covariance matrix: {reason}")]
    InvalidCovariance {
        rows: usize,
        cols: usize,
        reason: String,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("canonical eigenvalue {0} exceeds 1 beyond tolerance")]
    Unphysical(f64),

    #[error("degenerate overlap: (I - Γa·Γb) is singular")]
    DegenerateOverlap,

    #[error("single-particle spectrum has a zero mode ({0:e}); ground state is degenerate")]
    DegenerateGroundState(f64),

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("parameter vector has length {got}, expected {expected}")]
    ParameterLength { expected: usize, got: usize },

    #[error("no bundled parameters for model {model} at depth {depth}")]
    UnknownBundle { model: String, depth: usize },

    #[error("statevector oracle limited to {max} qubits, got {got}")]
    OracleTooLarge { max: usize, got: usize },

    #[error("objective returned a non-finite value at {0:?}")]
    NonFinite(Vec<f64>),

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("optimizer failed: {0}")]
    OptimizerFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
