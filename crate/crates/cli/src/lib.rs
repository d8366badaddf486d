//! Command-line front end for the max-product operator library.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod registry;

pub use app::run_from;
pub use error::{CliError, CliResult};
