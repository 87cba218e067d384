//! Error type shared across the library.

/// Errors produced by construction, parsing, and analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A trellis description file could not be parsed.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// The distance search exhausted its step budget without finding a
    /// diverge-and-merge event.
    #[error("no diverge-and-merge event found within {max_len} steps")]
    NoMergeEvent { max_len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand for [`Error::InvalidInput`] with a formatted message.
macro_rules! invalid_input {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidInput(format!($($arg)*))
    };
}

pub(crate) use invalid_input;
