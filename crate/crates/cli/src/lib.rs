//! Configuration, snapshot I/O and subcommands behind the `fch` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod snapshot;

pub use commands::{cmd_convergence, cmd_inspect, cmd_run};
pub use config::RunConfig;
pub use error::CliError;
