//! Command-line driver for `coldrec`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use cli::{run, Cli};
pub use config::{resolve, Override, RunConfig};
pub use error::CliError;
pub use manifest::{RunManifest, RUN_MANIFEST_FILE};
