//! Command-line driver: config parsing, run orchestration and provenance.

pub mod commands;
pub mod error;
pub mod manifest;

pub use error::{CliError, CliResult, Status};
