use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate character_id `{id}`")]
    DuplicateId { line: usize, id: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("corrupt data at byte offset {offset}: {message}")]
    Corruption { offset: u64, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("class {label} absent from the training set of fold(s) {folds:?}")]
    ClassAbsentFromTraining { label: String, folds: Vec<usize> },

    #[error("missing embedding for character `{0}`")]
    MissingEmbedding(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            if let csv::ErrorKind::Io(e) = err.into_kind() {
                return Error::Io(e);
            }
            unreachable!("is_io_error implies an Io kind");
        }
        Error::Format(err.to_string())
    }
}
