//! Config-driven experiments on top of the `samtest` library.
//!
//! The `samtest` binary reads an [`config::ExperimentConfig`] from TOML, runs
//! one subcommand and writes a CSV whose first line records the seed, the
//! config hash and the version.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod selfcheck;

pub use error::CliError;
