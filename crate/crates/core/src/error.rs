use thiserror::Error;

/// Errors raised by the fiber algebra, field operators and the solver front-end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("quaternionic dimension must be at least 1")]
    ZeroDimension,
    #[error("expected a form of degree {expected}, got degree {found}")]
    Degree { expected: usize, found: usize },
    #[error("expected a form of bidegree {expected:?}, got {found}")]
    Bidegree {
        expected: (usize, usize),
        found: String,
    },
    #[error("degree {degree} exceeds half the real dimension ({half}); the top-weight projection is undefined there")]
    AboveMiddleDegree { degree: usize, half: usize },
    #[error("form is not q-real (deviation {deviation:.3e})")]
    NotQReal { deviation: f64 },
    #[error("singular pairing system while building V (degenerate volume form)")]
    SingularPairing,
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("integrand is not of top degree")]
    NotTopDegree,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("snapshot format error: {0}")]
    Snapshot(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
