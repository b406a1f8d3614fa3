use thiserror::Error;

/// Errors raised by the numerical kernels and drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{function}: argument {value} outside the domain ({expected})")]
    Domain {
        function: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("{function}: series did not converge within {terms} terms")]
    Convergence { function: &'static str, terms: usize },

    #[error("quadrature on [{lo}, {hi}] stopped at {intervals} subintervals with error estimate {abs_err:e} (tolerance {tolerance:e})")]
    Quadrature {
        lo: f64,
        hi: f64,
        intervals: usize,
        abs_err: f64,
        tolerance: f64,
    },

    #[error("conditional gain distribution is degenerate for sigma = 0 (g equals g_hat)")]
    Degenerate,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(function: &'static str, value: f64, expected: &'static str) -> Result<T> {
    Err(Error::Domain {
        function,
        value,
        expected,
    })
}
