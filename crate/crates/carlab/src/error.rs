use std::path::PathBuf;

use thiserror::Error;

/// Failures that stop a run before any verdict exists. All map to exit code 2.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}
