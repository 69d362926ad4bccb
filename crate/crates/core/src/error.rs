use std::io;

use thiserror::Error;

/// Errors produced by the reconstruction toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("aliasing: {0}")]
    Aliasing(String),

    #[error("geometry mismatch: {0}")]
    Geometry(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error("invalid phantom: {0}")]
    Phantom(String),

    #[error("zero-norm signal: {0}")]
    ZeroSignal(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input (arguments, files, geometry),
    /// as opposed to failures during computation.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::ZeroSignal(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
