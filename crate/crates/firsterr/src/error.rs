use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: schema_version {found} is not supported (expected {expected})")]
    SchemaMismatch { line: usize, found: String, expected: u32 },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] firsterr_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("translator: {0}")]
    Translator(String),
    #[error("item {index} exhausted after {attempts} attempts ({histogram})")]
    Exhausted { index: u64, attempts: usize, histogram: String },
    #[error("input holds no records")]
    Empty,
}

pub type Result<T> = std::result::Result<T, Error>;
