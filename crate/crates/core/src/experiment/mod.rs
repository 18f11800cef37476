//! Reproducible experiment runner behind the `c3` binary.

pub mod commands;
pub mod config;
pub mod manifest;

pub use commands::{run, Command};
pub use config::{schema_json, ExperimentConfig, LoadedConfig, DATA_DIR_ENV};
pub use manifest::{OutputLock, RunManifest};

use serde_json::json;

use crate::error::Error;

/// Machine-readable error payload printed on failure.
pub fn error_json(e: &Error) -> String {
    json!({
        "error": {
            "kind": e.kind(),
            "exit_code": e.exit_code(),
            "message": e.to_string(),
        }
    })
    .to_string()
}
