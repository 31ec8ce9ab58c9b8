use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::optimizer::RunTrace;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("kernel argument r = {0} lies outside [-1, 1]")]
    KernelDomain(f64),

    #[error("moment system for beta = {beta} is singular or inaccurate (residual {residual:e})")]
    SingularMoments { beta: u32, residual: f64 },

    #[error("objective returned non-finite value {value} at x = {x:?}")]
    NonFinite { x: Vec<f64>, value: f64 },

    /// The iterate became non-finite. The trace holds every record up to the
    /// last finite iterate.
    #[error("iterate diverged at iteration {iter}")]
    Diverged { iter: usize, trace: Box<RunTrace> },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
