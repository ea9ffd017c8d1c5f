//! Command-line front end for parameter-aware NG-RC experiments.
//!
//! Commands read a JSON experiment config (or a preset), write CSV/JSON
//! artifacts into an output directory and index them in `manifest.json`.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use commands::{run, run_from_args, Cli, Command};
pub use config::{ExperimentConfig, GridSpec};
pub use error::CliError;
