use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("index {index} is outside the domain of {source_desc}")]
    OutOfDomain { index: i64, source_desc: String },

    #[error("invalid range: start {start} > end {end}")]
    InvalidRange { start: i64, end: i64 },

    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("invalid schedule at stage {stage}: violated `{inequality}`")]
    ScheduleInvalid { stage: usize, inequality: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("alphabet mismatch: k={left} vs k={right}")]
    AlphabetMismatch { left: u16, right: u16 },

    #[error("empty range: {0}")]
    EmptyRange(String),

    #[error("undefined gap: need at least 2 returning times, got {0}")]
    UndefinedGap(usize),

    #[error("malformed SEQW data: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
