use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed XML at line {line}, column {column}: {message}")]
    Xml {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("event {event} of trace {trace} has no concept:name attribute")]
    MissingActivity { trace: usize, event: usize },

    #[error("invalid document: {0}")]
    Format(String),

    #[error("CSV configuration error: {0}")]
    CsvConfig(String),

    #[error("CSV error at line {line}: {message}")]
    CsvRow { line: u64, message: String },

    #[error("transition {0} is not enabled in the given marking")]
    NotEnabled(String),

    #[error("search exceeded the state limit of {limit} states")]
    StateLimit { limit: usize },

    #[error("invalid net: {0}")]
    InvalidNet(String),

    #[error("process tree: {0}")]
    Tree(String),

    #[error("the event log is empty")]
    EmptyLog,

    #[error("ranking index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid activity pattern {name}: {reason}")]
    InvalidPattern { name: String, reason: String },

    #[error("duplicate activity pattern name {0}")]
    DuplicatePattern(String),

    #[error("no alignment exists: the final marking is unreachable")]
    Unalignable,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
