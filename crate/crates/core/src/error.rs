use thiserror::Error;

use crate::cdf::CdfEstimate;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid distribution parameters or a malformed input payload.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A quadrature configuration that cannot be honoured.
    #[error("configuration error: {0}")]
    Config(String),

    /// Estimated cancellation exceeds the acceptable fraction of the result.
    #[error("precision loss: {0}")]
    Precision(String),

    /// An iteration hit its cap. Quadrature failures carry their last estimate.
    #[error("no convergence in {context}")]
    NonConvergence {
        context: String,
        estimate: Option<Box<CdfEstimate>>,
    },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// The continuous log-determinant jumped between neighbouring nodes.
    #[error("branch tracking failed: {0}")]
    BranchTracking(String),

    /// The zero-correlation self-test of the multivariate integral failed.
    #[error("normalization self-test failed: {0}")]
    Normalization(String),
}

impl Error {
    pub(crate) fn non_convergence(context: impl Into<String>) -> Self {
        Error::NonConvergence {
            context: context.into(),
            estimate: None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
