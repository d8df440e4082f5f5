//! File formats, model artifacts, run configuration and subcommands for the
//! `funreg` command-line tool.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use config::{Overrides, RunConfig};
pub use error::{Error, Result, EXIT_INPUT, EXIT_RUNTIME};
