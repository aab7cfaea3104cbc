//! Configuration, file formats, verification checks and command
//! implementations for the `twistpath` binary.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod sampling;

pub use error::{CliError, Result};
