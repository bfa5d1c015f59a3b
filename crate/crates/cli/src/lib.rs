//! Pipeline orchestration behind the `slidemeta` command: decoding,
//! keyframe selection, OCR, extraction, cataloguing and evaluation.

pub mod commands;
pub mod config;
pub mod decode;
pub mod diag;
pub mod imageio;
pub mod pipeline;
pub mod tools;

use thiserror::Error;

pub use commands::{cmd_eval, cmd_export, cmd_extract, cmd_ingest, cmd_keyframes, cmd_query};
pub use config::PipelineConfig;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid flags, config file or input documents.
    #[error("{0}")]
    Config(String),
    /// A required external tool or engine is missing.
    #[error("{0}")]
    Environment(String),
    /// Anything that failed while doing the work.
    #[error("{0}")]
    Runtime(String),
    /// Some videos or clips of a batch failed; the rest succeeded.
    #[error("{failed} of {total} items failed")]
    Partial { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Environment(_) => exit::USAGE,
            CliError::Runtime(_) | CliError::Partial { .. } => exit::FAILURE,
        }
    }

    pub fn message(&self) -> String {
        self.to_string()
    }
}
