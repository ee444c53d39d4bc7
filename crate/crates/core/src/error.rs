use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the arguments was violated (shape mismatch,
    /// out-of-range parameter, even patch size, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An evaluation left the numerical domain of the model, e.g. the
    /// likelihood denominator would need clamping on too many pixels.
    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    /// An iterative solver broke down (nonpositive curvature in CG,
    /// inconsistent state).
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::NumericalDomain(msg.into())
    }

    pub(crate) fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }
}
