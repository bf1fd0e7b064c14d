use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed definition file: {0}")]
    DefinitionParse(#[from] serde_json::Error),

    #[error("definition {name:?} failed validation: {}", format_violations(.violations))]
    Validation {
        name: String,
        violations: Vec<Violation>,
    },

    #[error("duplicate activity name {0:?}")]
    DuplicateName(String),

    #[error("definition set is empty")]
    EmptyDefinitionSet,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: timestamp {timestamp} does not increase on previous {previous}")]
    NonMonotonic {
        line: usize,
        timestamp: i64,
        previous: i64,
    },

    #[error("line {line}: unparseable timestamp {value:?}")]
    Timestamp { line: usize, value: String },

    #[error("line {line}: end precedes start")]
    EndBeforeStart { line: usize },

    #[error("unknown activity {0:?}")]
    UnknownActivity(String),

    #[error("channel {0:?} has no activity mapping")]
    UnmappedChannel(String),

    #[error("{kind} id {id} does not exist in {activity:?}")]
    InvalidId {
        activity: String,
        kind: IdKind,
        id: u32,
    },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("k = {k} is out of range for {available} training instants")]
    KOutOfRange { k: usize, available: usize },

    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("unsupported report format {0:?}")]
    UnsupportedFormat(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdKind {
    Atomic,
    Context,
}

impl std::fmt::Display for IdKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IdKind::Atomic => f.write_str("atomic"),
            IdKind::Context => f.write_str("context"),
        }
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
