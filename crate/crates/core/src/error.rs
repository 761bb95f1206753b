use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed input shape, e.g. a non-square distance table.
    #[error("structural error: {0}")]
    Structural(String),
    /// An operand outside the operation's domain (empty set, point out of range).
    #[error("domain error: {0}")]
    Domain(String),
    /// A system could not be built from the given data.
    #[error("construction error: {0}")]
    Construction(String),
    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Enumeration or search would exceed its budget.
    #[error("budget exceeded: {what} needs {needed} but the limit is {limit}")]
    Budget {
        what: String,
        needed: u128,
        limit: u128,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }
}
