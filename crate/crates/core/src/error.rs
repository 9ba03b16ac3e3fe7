use thiserror::Error;

/// Errors raised by the library. Each variant maps to one failure class so the
/// command-line front end can choose an exit code.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("zero lattice vector has no primitive part")]
    ZeroVector,
    #[error("series use different numbers of t-variables ({0} vs {1})")]
    VariableCount(usize, usize),
    #[error("series is not invertible: its t-constant part is not 1")]
    NotUnit,
    #[error("unknown case or diagram kind: {0}")]
    UnknownCase(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("crossing direction is parallel to the wall")]
    ParallelCrossing,
    #[error("local diagram is not consistent below the requested order (order {0})")]
    InconsistentBelow(u32),
    #[error("defect term is not of wall-crossing normal form: {0}")]
    MalformedDefect(String),
    #[error("leftover x-exponent in a series that should depend on y only")]
    LeftoverX,
    #[error("no class table available for case {0}")]
    MissingClasses(String),
    #[error("ray {0} has no ancestry (initial ray)")]
    NoAncestry(String),
    #[error("unbalanced tropical vertex at index {0}")]
    Unbalanced(usize),
    #[error("test line meets the curve non-transversally")]
    NonTransverse,
    #[error("requested degree {0} exceeds the certified range {1}")]
    BeyondCertification(i64, i64),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
