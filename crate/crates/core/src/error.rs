use thiserror::Error;

use crate::hermitian::HermitianMatrix;

/// Errors produced by matrix construction and the capacity solvers.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not Hermitian: relative asymmetry {asymmetry:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error(
        "matrix is not positive semidefinite: eigenvalue {min_eigenvalue:.6e} below tolerance"
    )]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("log-det argument is not positive definite")]
    NumericalDomain,

    #[error("optimal covariance is not full-rank here: {0}")]
    NotFullRank(String),

    #[error("no sign change over the multiplier bracket: f(lo)-target={f_lo:.3e}, f(hi)-target={f_hi:.3e}")]
    InfeasibleBracket { f_lo: f64, f_hi: f64 },

    #[error("bisection did not reach tolerance after {iterations} iterations")]
    BisectionStalled { iterations: usize },

    #[error("projection did not converge after {iterations} Dykstra cycles")]
    ProjectionFailure {
        iterations: usize,
        last_iterate: Box<HermitianMatrix>,
    },

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;
