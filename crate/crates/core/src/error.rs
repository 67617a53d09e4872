use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GbsError {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The request is well formed but outside what the chosen engine supports.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// A computation produced a non-finite or clearly unphysical number.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The configuration would need more memory than the engine allows.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type GbsResult<T> = Result<T, GbsError>;

macro_rules! invalid {
    ($($arg:tt)*) => { $crate::error::GbsError::InvalidArgument(format!($($arg)*)) };
}
macro_rules! unsupported {
    ($($arg:tt)*) => { $crate::error::GbsError::Unsupported(format!($($arg)*)) };
}
pub(crate) use invalid;
pub(crate) use unsupported;
