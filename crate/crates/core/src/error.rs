use thiserror::Error;

/// Errors raised by configuration, sampling and the solver blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index out of range: {what} = {index}, limit {limit}")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("non-finite objective value {value} at tau1 = {tau}")]
    NonFinite { tau: f64, value: f64 },

    #[error("exhaustive assignment refused for K = {0} (limit {max})", max = crate::assign::MAX_ENUMERATE_USERS)]
    TooManyUsers(usize),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
