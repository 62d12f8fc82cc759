use thiserror::Error;

/// Errors surfaced by the command-line front end, mapped to exit codes:
/// 1 solver failure, 2 input validation, 3 KKT fail (`check` only).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("solver error: {0}")]
    Solver(#[from] mimocap_core::SolverError),

    #[error("KKT check failed (max residual {max_residual:.3e} above tolerance {tolerance:.3e})")]
    KktFail { max_residual: f64, tolerance: f64 },

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => 1,
            CliError::Validation(_) | CliError::Io { .. } => 2,
            CliError::KktFail { .. } => 3,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
