use alloc::string::String;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("embedder mismatch: model was trained with {expected}, got {found}")]
    EmbedderMismatch { expected: String, found: String },
    #[error("external service failed: {0}")]
    External(String),
    #[error("policy error: {0}")]
    Policy(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Shorthand for building an [`Error::InvalidArgument`].
macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
