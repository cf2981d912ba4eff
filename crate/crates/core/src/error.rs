use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate step size: log argument {argument} <= 1 (n = {n})")]
    DegenerateStep { n: usize, argument: f64 },

    #[error("non-finite integrand value {value} at node k = {index} (x = {x})")]
    Evaluation { index: i64, x: f64, value: f64 },

    #[error("parameter program failed at homotopy parameter {tau}: residual {residual:e}")]
    Optimization { tau: f64, residual: f64 },

    #[error("optimized map is not monotone: h'({t}) = {slope}")]
    NonMonotoneMap { t: f64, slope: f64 },

    #[error("ill-conditioned system (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64, last: Vec<f64> },

    #[error("value out of supported range: {0}")]
    Range(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
}

impl Error {
    /// True for failures of a numerical method (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateStep { .. }
                | Error::Evaluation { .. }
                | Error::Optimization { .. }
                | Error::NonMonotoneMap { .. }
                | Error::IllConditioned { .. }
                | Error::NonConvergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
