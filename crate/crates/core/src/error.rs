use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("unsupported constellation order {0}: expected a square QAM with M >= 4")]
    UnsupportedOrder(usize),
    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("mmse target {0} outside (0, 1]")]
    OutOfDomain(f64),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(
        "rate floor {floor:.6e} bits/s exceeds the maximum achievable rate {max_rate:.6e} bits/s"
    )]
    InfeasibleQos { max_rate: f64, floor: f64 },
    #[error("bisection failure: {0}")]
    BisectionFailure(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("too few samples: {got} < {min}")]
    TooFewSamples { got: usize, min: usize },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
