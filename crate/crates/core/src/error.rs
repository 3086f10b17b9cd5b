use alloc::string::String;

/// Errors raised by the pure scoring and kernel code.
///
/// Provider and IO failures are not represented here; traits that reach
/// external resources carry their own associated error type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller broke a documented precondition (empty sequence, size mismatch, NaN input).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A configuration value is out of range.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
