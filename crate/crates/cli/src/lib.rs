//! Command-line front end for the `glue-polling` engines.
//!
//! Every subcommand reads a config document (see [`config`]), runs one
//! engine and writes a comma-separated table with a header row. Exit codes:
//! 0 on success, 1 for invalid input, 2 for numerical failures and 3 when a
//! reproduction or sweep check falls outside its tolerance.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod reproduce;
pub mod sweep;

pub use error::{CliError, Result};
