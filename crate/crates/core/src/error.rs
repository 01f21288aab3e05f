use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports.
///
/// The variants split into two families that the command line maps onto
/// distinct exit codes: configuration problems (bad category keys, bad
/// overrides, bad parameters) and data problems (ragged files, missing
/// columns, undecodable activations). See [`Error::is_config`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("duplicate header {0:?}")]
    DuplicateHeader(String),

    #[error("column {column:?} has {found} rows, expected {expected}")]
    ColumnLength {
        column: String,
        found: usize,
        expected: usize,
    },

    #[error("invalid category key {0:?}")]
    InvalidKey(String),

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("category {owner:?} slot {slot} references unregistered category {key:?}")]
    DanglingReference {
        owner: String,
        slot: &'static str,
        key: String,
    },

    #[error("family tree override for {0:?} has no process entry")]
    MissingProcessEntry(String),

    #[error("registry validation failed: {0}")]
    InvalidRegistry(String),

    #[error("invalid parameter {param:?} for {category}: {reason}")]
    InvalidParam {
        category: String,
        param: String,
        reason: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("column {0:?} not found")]
    MissingColumn(String),

    #[error("{0}")]
    Precondition(String),

    #[error("artifact format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u64 },

    #[error("malformed artifact: {0}")]
    Malformed(String),

    #[error("no invertible path for {0}")]
    NotInvertible(String),

    #[error("activation pattern {pattern} in {header:?} is not in the stored code map")]
    InvalidPattern { header: String, pattern: String },

    #[error("{0}")]
    Importance(String),
}

impl Error {
    /// True for errors caused by configuration rather than data.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidKey(_)
                | Error::UnknownCategory(_)
                | Error::DanglingReference { .. }
                | Error::MissingProcessEntry(_)
                | Error::InvalidRegistry(_)
                | Error::InvalidParam { .. }
                | Error::Config(_)
        )
    }
}
