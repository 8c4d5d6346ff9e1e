//! File formats, configuration and subcommands for the `onhkit` tool.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod report;

pub use error::{CliError, ExitClass, Result};
