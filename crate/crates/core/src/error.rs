use thiserror::Error;

/// Errors raised by the measurement library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("signal never reached the {threshold_mv} mV threshold")]
    NoTrigger { threshold_mv: f64 },

    #[error("record ended before the reference half-wave was complete")]
    Truncated,

    #[error("expected two echoes, found {found}")]
    MissingEcho { found: usize },

    #[error("echo carrier coherence {0:.3} too low")]
    Incoherent(f64),

    #[error("echo windows overlap")]
    WindowsOverlap,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("not allowed in {0} mode")]
    WrongMode(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
