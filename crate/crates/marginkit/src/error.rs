use std::path::{Path, PathBuf};

use thiserror::Error;

/// Process exit code for malformed or missing input.
pub const EXIT_INPUT: i32 = 2;
/// Process exit code for a failed computation.
pub const EXIT_NUMERICAL: i32 = 3;

/// Everything that can stop a run.
#[derive(Debug, Error)]
pub enum CliError {
    /// A file could not be read.
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A file could not be written.
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A file was read but its contents are invalid.
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    /// The configuration is inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// The pipeline failed for one asset.
    #[error("asset `{asset}`: {message}")]
    Numerical { asset: String, message: String },
    /// A failure that concerns the whole book rather than one asset.
    #[error("{0}")]
    Portfolio(String),
}

impl CliError {
    /// Exit code of the stable contract: 2 for input, 3 for numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Write { .. } | CliError::Parse { .. } | CliError::Config(_) => EXIT_INPUT,
            CliError::Numerical { .. } | CliError::Portfolio(_) => EXIT_NUMERICAL,
        }
    }

    pub(crate) fn parse(path: &Path, message: impl ToString) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    pub(crate) fn numerical(asset: &str, message: impl ToString) -> Self {
        CliError::Numerical {
            asset: asset.to_string(),
            message: message.to_string(),
        }
    }
}
