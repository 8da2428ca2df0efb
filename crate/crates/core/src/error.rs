use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Variants group failures by who is at fault: bad parameters (`Domain`), bad
/// observations (`Data`), bad configuration (`Config`), misuse of a stateful
/// object (`State`, `Protocol`) and family mismatches (`Type`).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter outside the allowable set: coordinate {coordinate} = {value} ({reason})")]
    Domain {
        coordinate: String,
        value: f64,
        reason: String,
    },

    #[error("observation {value} is not a support point of the reward law")]
    Data { value: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("unsupported model family: {0}")]
    Type(String),

    #[error("replication with seed {seed} failed: {source}")]
    Replication {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
