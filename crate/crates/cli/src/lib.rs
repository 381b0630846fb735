//! Standard-library companion to `ebconc-core`: strict JSON job configs,
//! CSV/JSON persistence with byte-stable formatting, a rayon-based replicate
//! runner, and the plain-text rate report.

pub mod config;
pub mod io;
pub mod jobs;
pub mod report;
pub mod runner;

pub use ebconc_core as core;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("config file {path}: {message}")]
    ConfigFile { path: String, message: String },
    #[error("{0}")]
    Core(#[from] ebconc_core::Error),
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("unsupported schema version {found} in {path} (expected {expected})")]
    VersionMismatch {
        path: String,
        found: String,
        expected: String,
    },
    #[error("malformed {what} in {path}: {message}")]
    Malformed {
        what: &'static str,
        path: String,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
