use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of the inputs are inconsistent with each other.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    /// One or more scenario invariants failed; the report lists all of them.
    #[error("scenario validation failed:\n{0}")]
    Validation(ValidationReport),

    /// The chain does not have a unique, strictly positive stationary law.
    #[error("transition matrix is not irreducible and aperiodic: {0}")]
    NotErgodic(String),

    #[error("mean dynamics matrix is not Hurwitz (max real part of eigenvalues {max_real:e})")]
    NotHurwitz { max_real: f64 },

    #[error("internal cross-check failed: {0}")]
    CrossCheck(String),

    #[error("eigenvalue iteration did not converge for a {0}x{0} matrix")]
    EigenNoConvergence(usize),

    #[error("linear system is singular: {0}")]
    Singular(String),

    /// The moment recursion is not mean-square stable (spectral radius of the
    /// second-moment block is not below one).
    #[error("unstable system: spectral radius of H22 is {sr_h22:e} (must be < 1)")]
    Unstable { sr_h22: f64 },

    /// Moments exceeded the divergence threshold during a recursion.
    #[error("moment recursion diverged at step {step} (spectral radius of H22: {})",
        sr_h22.map(|s| format!("{s:e}")).unwrap_or_else(|| "not computed".into()))]
    Diverged { step: usize, sr_h22: Option<f64> },

    #[error("explicit lifted matrices unavailable: n*n_xi^2 = {size} exceeds size guard {guard}")]
    SizeGuard { size: usize, guard: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("path budget exceeded: {paths} paths > {budget}; reduce the horizon or the number of states")]
    PathBudget { paths: f64, budget: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("failed to parse scenario: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
