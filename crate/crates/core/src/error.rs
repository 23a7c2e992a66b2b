use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid constellation order {order}: {reason}")]
    InvalidOrder { order: usize, reason: &'static str },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("vector is not a codeword of {scheme}")]
    NotACodeword { scheme: String },

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short code used as the CLI error prefix.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidOrder { .. } => "E_ORDER",
            Error::Domain(_) => "E_DOMAIN",
            Error::Usage(_) => "E_USAGE",
            Error::Capacity(_) => "E_CAPACITY",
            Error::NotACodeword { .. } => "E_CODEWORD",
            Error::InvalidTable(_) => "E_TABLE",
            Error::Io(_) => "E_IO",
            Error::Json(_) => "E_JSON",
        }
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
