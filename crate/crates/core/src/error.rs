use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} amplitudes, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state vector has norm below 1e-12")]
    ZeroVector,

    #[error("unsupported qubit count {0} (expected {1})")]
    UnsupportedQubits(usize, &'static str),

    #[error("invalid bipartition: {0}")]
    InvalidPartition(String),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("unknown state name `{0}`")]
    UnknownState(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("profile violates the simplex inequality (worst margin {0:.3e})")]
    InfeasibleProfile(f64),

    #[error("solver did not converge (residual {residual:.3e} after {iterations} iterations)")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("negative split area {0:.3e}")]
    NegativeSigma(f64),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("degenerate tetrahedron has no 3D embedding")]
    DegenerateShape,

    #[error("unsupported format `{0}`")]
    UnsupportedFormat(String),

    #[error("ensemble size {m} is smaller than the rank {rank}")]
    EnsembleTooSmall { m: usize, rank: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
