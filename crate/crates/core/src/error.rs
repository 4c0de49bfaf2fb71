use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not reach tolerance {requested:e} (estimate {estimate}, error {error:e}) after {intervals} subintervals")]
    QuadratureBudget {
        estimate: f64,
        error: f64,
        requested: f64,
        intervals: usize,
    },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl MathError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, MathError>;

/// A computed value together with an absolute error bound or standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }

    /// True when `self` and `other` agree within `slack` combined error units.
    pub fn agrees_with(&self, other: &Estimate, slack: f64) -> bool {
        (self.value - other.value).abs() <= slack * (self.error + other.error)
    }
}
