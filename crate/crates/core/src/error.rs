use thiserror::Error;

/// Errors raised by the solver pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{what}: argument {value} outside domain [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("{what} did not converge: {detail}")]
    Convergence { what: &'static str, detail: String },

    #[error("degenerate upper tail at c = {c}: survival mass {mass:e}")]
    DegenerateTail { c: f64, mass: f64 },

    #[error("cost singularity: action {s} at sender type {z}")]
    Singularity { s: f64, z: f64 },

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("golden table schema mismatch: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{context}: {source}")]
    Row { context: String, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } | Error::Config(_) | Error::Schema(_) | Error::Io(_) => 1,
            Error::Domain { .. }
            | Error::Convergence { .. }
            | Error::DegenerateTail { .. }
            | Error::Singularity { .. }
            | Error::Inconsistency(_) => 2,
            Error::Row { source, .. } => source.exit_code(),
        }
    }

    pub(crate) fn convergence(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Convergence {
            what,
            detail: detail.into(),
        }
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

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
