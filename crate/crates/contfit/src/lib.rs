//! Command-line experiments around `contfit-core`: configuration, file
//! formats, a thread-pool executor and the `contfit` subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod io;
pub mod render;

pub use commands::{cmd_bspline_grid, cmd_gen, cmd_inr_fit, cmd_report, InrMode};
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
