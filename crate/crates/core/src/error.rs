use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

/// Last iterate of a constrained solve that did not meet its tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceFailure {
    pub reason: String,
    pub iterate: Vec<f64>,
    pub value: f64,
    pub constraint_residual: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("under-resolved: {0}")]
    Resolution(String),

    #[error("non-finite value encountered at iteration {iteration}")]
    NonFinite { iteration: usize, iterate: Vec<f64> },

    #[error("no convergence: {}", .0.reason)]
    Convergence(alloc::boxed::Box<ConvergenceFailure>),

    #[error("fit failed: {0}")]
    Fit(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
