//! Scenario configs, seeded Monte Carlo runs and CSV output for `trajloc`.

pub mod config;
pub mod experiments;
pub mod io;
pub mod report;
pub mod runner;

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] trajloc::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("data file: {0}")]
    Data(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
