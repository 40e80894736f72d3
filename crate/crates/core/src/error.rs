use thiserror::Error;

/// Errors produced by the sampling, projection and benchmark layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    #[error("invalid directions: {0}")]
    InvalidDirections(String),

    #[error("variance {value:e} at index {index} is below the admissible floor")]
    DegenerateVariance { index: usize, value: f64 },

    #[error("k = {k} is out of range for dimension {n}")]
    KOutOfRange { k: usize, n: usize },

    #[error(
        "rejection budget exhausted: {accepted} accepted out of {proposals} proposals \
         (acceptance rate {rate:e})"
    )]
    BudgetExhausted {
        accepted: usize,
        proposals: u64,
        rate: f64,
    },

    #[error("integrand vanished on pool")]
    IntegrandVanished,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("oracle cache: {0}")]
    Cache(String),
}

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
