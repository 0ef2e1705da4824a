use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;
pub const EXIT_SINGULAR: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// `path` is the dotted location of the offending field, or empty for the whole document.
    #[error("config error{}: {message}", if path.is_empty() { String::new() } else { format!(" at {path}") })]
    Config { path: String, message: String },

    #[error("computation failed: {0}")]
    Compute(#[from] fluxlab_core::Error),

    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => EXIT_CONFIG,
            Self::Compute(e) if e.is_singularity() => EXIT_SINGULAR,
            Self::Compute(_) | Self::Output { .. } => EXIT_COMPUTE,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
