use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "fixed-point solver did not converge after {iterations} iterations \
         (last iterate {last}, residual {residual:e})"
    )]
    SolverFailure {
        iterations: usize,
        last: f64,
        residual: f64,
    },

    #[error("target {target} is unreachable: {reason}")]
    Unreachable { target: f64, reason: String },

    #[error("GAMP diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("{failed} of {total} Monte Carlo trials diverged (limit is 1%)")]
    TooManyDivergences { failed: usize, total: usize },

    #[error("too many failed evaluations: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Stable process exit code: 1 config, 2 numeric, 3 unreachable target.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::Config { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 1,
            Error::SolverFailure { .. }
            | Error::Diverged { .. }
            | Error::TooManyDivergences { .. }
            | Error::TooManyFailures { .. } => 2,
            Error::Unreachable { .. } => 3,
        }
    }

    /// Short machine-readable tag used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SolverFailure { .. } => "solver_failure",
            Error::Unreachable { .. } => "unreachable_target",
            Error::Diverged { .. } => "diverged",
            Error::TooManyDivergences { .. } => "too_many_divergences",
            Error::TooManyFailures { .. } => "too_many_failures",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
