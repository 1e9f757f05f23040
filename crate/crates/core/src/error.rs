use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown model `{0}` (expected degenerate_ising, transverse_coupled or custom)")]
    UnknownModel(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("non-Hermitian input: {0}")]
    NonHermitian(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("integrator did not converge: {0}")]
    NonConvergence(String),

    #[error("finite-difference step {0:e} underflows")]
    StepUnderflow(f64),

    #[error("measurement operators are not complete: residual norm {residual:e}")]
    Incomplete { residual: f64 },

    #[error("grid too narrow: edge amplitude {edge:e} exceeds {limit:e}")]
    GridTooNarrow { edge: f64, limit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
