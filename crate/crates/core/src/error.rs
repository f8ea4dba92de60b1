use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The configuration lies outside the parameter region where the
    /// scaling constants exist.
    #[error("invalid regime: {constraint} violated")]
    InvalidRegime { constraint: String },

    #[error("memory guard: {expected} simulated vertices exceed the cap of {cap}")]
    MemoryGuard { expected: f64, cap: u64 },

    #[error("no truncation in this model")]
    NoTruncation,

    #[error("insufficient positive order statistics: {0}")]
    InsufficientData(String),

    #[error("order statistic {k} requested from {len} values")]
    OrderStatistic { k: usize, len: usize },

    #[error("truncation bias {bias:.4} exceeds the gate {gate}")]
    TruncationBias { bias: f64, gate: f64 },

    /// `line` 0 marks a command-line override or a missing key.
    #[error("config error at {}, key `{key}`: {reason}", location(*.line))]
    Config { line: usize, key: String, reason: String },

    #[error("{0}")]
    Io(String),
}

fn location(line: usize) -> String {
    if line == 0 {
        "command line".into()
    } else {
        format!("line {line}")
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
