use thiserror::Error;

use crate::linalg::SymMatrix;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Jacobi eigen-solver did not converge after {sweeps} sweeps for {matrix:?}")]
    EigenNonConvergence {
        sweeps: usize,
        matrix: Box<SymMatrix>,
    },

    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    #[error("sphere chart evaluated at a pole: parameters {0:?}")]
    ChartPole(Vec<f64>),

    #[error("degenerate immersion at parameters {point:?}: {reason}")]
    DegenerateImmersion { point: Vec<f64>, reason: String },

    #[error("non-finite {what} at parameters {point:?}")]
    NonFinite { what: &'static str, point: Vec<f64> },

    #[error("integrand is not finite at grid node {index}")]
    NonFiniteIntegrand { index: usize },

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("grid does not match family: {0}")]
    GridMismatch(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
