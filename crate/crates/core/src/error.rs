use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("enumeration cap exceeded: {0}")]
    Cap(String),

    #[error("channel synthesis error: {0}")]
    Synthesis(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("scheduling error: {0}")]
    Scheduling(String),

    #[error("no samples: {0}")]
    NoSamples(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Cap(_) => 3,
            Error::Io(_) => 4,
            Error::Synthesis(_) | Error::Numeric(_) => 5,
            Error::Scheduling(_) => 6,
            Error::NoSamples(_) => 7,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
