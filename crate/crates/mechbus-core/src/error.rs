use thiserror::Error;

/// Errors surfaced by the core library. The CLI maps these onto exit codes:
/// invalid input → 2, non-convergence → 3, infeasible schedule → 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {actual})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator is not Hermitian (defect {defect:.3e} exceeds tolerance {tol:.3e})")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("propagation did not converge: estimated error {est_error:.3e} after {steps} steps (limit {max_steps})")]
    NonConvergence {
        steps: usize,
        max_steps: usize,
        est_error: f64,
    },

    #[error("matrix exponential did not converge (norm {norm:.3e} beyond scaling cap)")]
    ExpOverflow { norm: f64 },

    #[error("bias flux off the symmetric working point: |sin(pi*phi_b)| - 1 = {defect:.3e} (tolerance {tol:.3e})")]
    OffWorkingPoint { defect: f64, tol: f64 },

    #[error("schedule infeasible: {0}")]
    Infeasible(String),

    #[error("state-space dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("linear algebra backend failure: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

pub type Result<T> = std::result::Result<T, Error>;
