use num_complex::Complex64;
use thiserror::Error;

use crate::cme::CmeSpectralForm;

pub type Result<T, E = NiltError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NiltError {
    #[error("node {index}: Re(s) = {re_s} is not to the right of the convergence abscissa {abscissa}")]
    NodeOutsideConvergence {
        index: usize,
        re_s: f64,
        abscissa: f64,
    },

    #[error("transform returned a non-finite value at node {index} (s = {s})")]
    NonFiniteTransform { index: usize, s: Complex64 },

    #[error("weighted sum is not finite at shift θ = {theta}")]
    NonFiniteSum { theta: f64 },

    #[error("time point must be positive and finite, got {0}")]
    InvalidTime(f64),

    #[error("Euler coefficients need an even order n >= 2, got {0}")]
    EulerOddOrder(usize),

    #[error("order {order} outside the supported range {min}..={max}")]
    OrderOutOfRange { order: usize, min: usize, max: usize },

    #[error("weight integral diverges: node {index} has Re(beta) = {re} <= 0")]
    DivergentTail { index: usize, re: f64 },

    #[error("coefficient set is malformed: {0}")]
    MalformedCoefficients(String),

    #[error("spectral form violates invariant `{invariant}`")]
    InvalidSpectralForm { invariant: String },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("CME optimiser did not converge within {evaluations} evaluations (best SCV {scv:e})")]
    OptimizerNonConvergence {
        best: Box<CmeSpectralForm>,
        scv: f64,
        evaluations: usize,
    },

    #[error("main interval not found: {0}")]
    MainIntervalUndetected(String),

    #[error("adaptive quadrature stopped with estimate {estimate:e} and error bound {error:e}")]
    QuadratureNonConvergence { estimate: f64, error: f64 },

    #[error("transform query has no time-domain oracle")]
    MissingOracle,

    #[error("no CME coefficients available for order {0}")]
    MissingCmeOrder(usize),

    #[error("cache error: {0}")]
    Cache(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl From<std::io::Error> for NiltError {
    fn from(e: std::io::Error) -> Self {
        NiltError::Io(e.to_string())
    }
}
