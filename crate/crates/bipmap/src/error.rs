use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("numerical failure: {0}")]
    Numerics(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("statistical check failed: {0}")]
    Statistical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Invalid(_) => 2,
            Error::Capacity(_) | Error::Certification(_) | Error::Numerics(_) | Error::Io(_) => 3,
            Error::Statistical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

