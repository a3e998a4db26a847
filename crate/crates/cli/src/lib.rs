//! Command-line driver for `xjx-core`: writes figure data, runs whiteness tests on
//! user data and executes the acceptance checks.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod verify;

pub use error::{CliError, Result};
