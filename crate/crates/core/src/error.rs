use thiserror::Error;

/// Every failure the library reports, grouped by the class the CLI exposes.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {argument} {reason}")]
    Domain { argument: &'static str, reason: String },

    /// Overflow, non-finite intermediate, non-convergence or a violated envelope.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The data do not support the model (e.g. the posterior may be improper).
    #[error("model error: {0}")]
    Model(String),

    /// Inputs are well formed but unusable for the requested operation.
    #[error("data error: {0}")]
    Data(String),

    /// Malformed input text.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    /// Inconsistent or incomplete request.
    #[error("request error: {0}")]
    Request(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(argument: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain { argument, reason: reason.into() }
    }

    /// Prefix the message with `ctx`, keeping the error class.
    pub fn context(self, ctx: &str) -> Self {
        match self {
            Error::Domain { argument, reason } => Error::Domain { argument, reason: format!("{reason} ({ctx})") },
            Error::Numerical(m) => Error::Numerical(format!("{ctx}: {m}")),
            Error::Model(m) => Error::Model(format!("{ctx}: {m}")),
            Error::Data(m) => Error::Data(format!("{ctx}: {m}")),
            Error::Parse { line, message } => Error::Parse { line, message: format!("{ctx}: {message}") },
            Error::Request(m) => Error::Request(format!("{ctx}: {m}")),
            Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), format!("{ctx}: {e}"))),
        }
    }

    /// Short machine-readable class name.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Numerical(_) => "numerical",
            Error::Model(_) => "model",
            Error::Data(_) => "data",
            Error::Parse { .. } => "parse",
            Error::Request(_) => "request",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
