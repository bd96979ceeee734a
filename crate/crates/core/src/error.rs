use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure categories shared by the library and the command line front end.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value is missing, malformed or violates an invariant.
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// Two inputs that must agree in length do not.
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A numerical procedure failed to converge or a factorization broke down.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The requested problem would exceed a memory or size limit.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("malformed input ({context}): {reason}")]
    Parse { context: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(context: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            reason: reason.into(),
        }
    }

    /// Process exit status used by the command line tool.
    ///
    /// `1` configuration/input problems, `2` numeric failures, `3` resource limits.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) => 2,
            Error::Resource(_) => 3,
            Error::Domain(_)
            | Error::Config { .. }
            | Error::Shape { .. }
            | Error::Parse { .. }
            | Error::Io(_) => 1,
        }
    }
}
