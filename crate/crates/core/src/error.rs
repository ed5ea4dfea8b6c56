use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("{file}: {malformed} of {lines} lines malformed, refusing to continue (wrong file?)")]
    TooManyMalformed {
        file: String,
        malformed: usize,
        lines: usize,
    },
}

/// Errors from the editable text configuration files (trait map, phrase table).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ConfigFileError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PersonalityError {
    #[error("user {0}: no genre signal (no interacted item carries genres)")]
    NoGenreSignal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResponseError {
    #[error("unparseable response: no list lines found")]
    Unparseable,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FpxError {
    #[error("incomplete vector: {0} is missing")]
    IncompleteVector(&'static str),
}
