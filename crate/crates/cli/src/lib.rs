//! Configuration, orchestration and report files for the `semidiscrete` command.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;

pub use commands::{cmd_convergence, cmd_negativity, cmd_single_path, cmd_validate, RunContext};
pub use config::{parse_config, RunConfig, DEFAULT_SEED};
pub use error::{CliError, Result};
