//! Library surface of the `bswtv` command-line tool, exposed so the
//! integration tests drive the same code paths as the binary.

pub mod commands;
pub mod config;
pub mod csvlog;
pub mod error;
pub mod pgm;

pub use error::{CliError, Result};
