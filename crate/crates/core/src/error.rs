use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("generator index {0} has no assignment")]
    MissingGenerator(usize),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
