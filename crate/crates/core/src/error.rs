use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state is within {distance:e} LU of a primary")]
    SingularState { distance: f64 },

    #[error("integration failed at t = {time}: {reason}")]
    IntegrationFailure { time: f64, reason: String },

    #[error("eigenvalue decomposition did not converge")]
    EigenFailure,

    #[error("argument {value} outside the domain {domain}")]
    DomainError { value: f64, domain: &'static str },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("target reflects no light toward the observer")]
    InvisibleTarget,

    #[error("observer is inside the occulting body")]
    ObserverInsideBody,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("infeasible solution: {0}")]
    InfeasibleSolution(String),

    #[error("coverage fraction undefined for a demand with no active entries")]
    EmptyDemand,

    #[error("{count} slots need repair but the permutation cap is {cap}")]
    PermutationCap { count: usize, cap: usize },

    #[error("no feasible solution: p = {p} exceeds n = {n}")]
    NoFeasibleSolution { p: usize, n: usize },

    #[error("enumeration size {size:e} exceeds the brute-force limit {limit:e}")]
    TooLarge { size: f64, limit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: &std::path::Path, line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: message.into(),
        }
    }
}
