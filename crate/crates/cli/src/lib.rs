//! Command-line front end: configuration, run drivers and output files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod drive;
pub mod error;
pub mod output;
pub mod report;

pub use config::{load_config, RunConfig};
pub use error::{CliError, Result};
