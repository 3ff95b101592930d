use thiserror::Error;

pub type Result<T> = std::result::Result<T, FstError>;

#[derive(Debug, Error)]
pub enum FstError {
    /// The output alphabet of one machine does not match the input alphabet
    /// of the machine it is being composed with.
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    /// The algorithm does not support this machine shape (e.g. a cycle).
    #[error("unsupported structure: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("empty language: no accepting path")]
    EmptyLanguage,
    #[error("invalid fst: {0}")]
    Invalid(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
