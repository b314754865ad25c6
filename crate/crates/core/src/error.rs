use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Hadamard mixing matrix needs a power-of-two dimension, got {0}")]
    HadamardUnavailable(usize),
    #[error("kappa must lie in [0, 1], got {0}")]
    InvalidKappa(f64),
    #[error("ZF Gram matrix is ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("interference matrix has no left null space")]
    NoNullSpace,
    #[error("decoding direction vanishes (zero received signal)")]
    ZeroDirection,
    #[error("cannot feed back {requested} directions from a {available}-dimensional channel")]
    LTooLarge { requested: usize, available: usize },
    #[error("exhaustive search over {subsets} subsets exceeds the budget of {budget}")]
    BudgetExceeded { subsets: u128, budget: u128 },
    #[error("parse error{}: {message}", location.as_ref().map(|l| format!(" at {l}")).unwrap_or_default())]
    Parse { location: Option<String>, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("bin grids differ: {0}")]
    BinMismatch(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
