use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected} classes, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("enumeration limit exceeded: {what} supports at most {cap} classes, got {k}")]
    EnumerationLimit {
        what: &'static str,
        k: usize,
        cap: usize,
    },

    /// A reference oracle was asked for more than it can enumerate, or found
    /// nothing to enumerate.
    #[error("oracle limit: {0}")]
    OracleLimit(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code for the command-line surface.
    ///
    /// 2: input validation, 3: numerical failure, 4: enumeration cap.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::DimensionMismatch { .. }
            | Error::Parse { .. }
            | Error::Io(_) => 2,
            Error::Numerical(_) | Error::OracleLimit(_) => 3,
            Error::EnumerationLimit { .. } => 4,
        }
    }

    /// Short machine-readable tag, printed alongside the exit code.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::Numerical(_) => "numerical",
            Error::EnumerationLimit { .. } => "enumeration-limit",
            Error::OracleLimit(_) => "oracle-limit",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}
