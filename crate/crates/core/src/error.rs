use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Why the Gram ansatz did not produce a normalization matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GramFailure {
    /// The min-norm weights leave `Qc = 1` unsatisfied.
    NoSolution { residual: f64 },
    /// The weights solve `Qc = 1` but `X` is not positive semidefinite.
    NoRealSolution { min_eigenvalue: f64 },
}

impl std::fmt::Display for GramFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GramFailure::NoSolution { residual } => {
                write!(f, "No solution alpha found (residual {residual:.3e})")
            }
            GramFailure::NoRealSolution { min_eigenvalue } => write!(
                f,
                "No real solution alpha found (smallest eigenvalue {min_eigenvalue:.3e})"
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{what} exceeds budget: requires {required}, allowed {allowed}")]
    Resource {
        what: &'static str,
        required: u128,
        allowed: u128,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("{0}")]
    NoAlpha(GramFailure),
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
