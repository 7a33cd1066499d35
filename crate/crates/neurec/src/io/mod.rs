//! File formats: interaction logs, split files, id maps and model checkpoints.

mod checkpoint;
mod ids;
mod interactions;
mod split_file;

pub use checkpoint::{decode_model, encode_model, load_model, save_model, SavedModel};
pub use ids::{read_ids, write_ids};
pub use interactions::{load_interactions, load_interactions_path, Column, Delimiter, LogFormat};
pub use split_file::{read_split, read_split_path, write_split, write_split_path};

use std::path::PathBuf;

/// Errors raised while reading or writing any of the file formats.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Stream(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] neurec_core::Error),
}

impl FormatError {
    pub(crate) fn line(line: usize, message: impl Into<String>) -> Self {
        FormatError::Line { line, message: message.into() }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        FormatError::Io { path: path.to_path_buf(), source }
    }
}

pub type FormatResult<T> = Result<T, FormatError>;
