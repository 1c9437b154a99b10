use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, ChmError>;

#[derive(Debug, Error)]
pub enum ChmError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error(
        "no square-root branch gives unimodular parameters: principal |x|={principal_x:.3e} |t|={principal_t:.3e}, negated |x|={negated_x:.3e} |t|={negated_t:.3e}"
    )]
    BranchFailure { principal_x: f64, principal_t: f64, negated_x: f64, negated_t: f64 },

    #[error("QR iteration did not converge after {iterations} iterations ({converged} of {n} eigenvalues found)")]
    Convergence { iterations: usize, converged: usize, n: usize, partial: Vec<Complex64> },

    #[error("inverse iteration failed for eigenvalue {value}: residual {residual:.3e}")]
    EigenvectorConvergence { value: Complex64, residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for ChmError {
    fn from(e: serde_json::Error) -> Self {
        ChmError::Parse(e.to_string())
    }
}
