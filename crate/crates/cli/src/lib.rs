//! Library side of the `gbridge` binary: configuration and commands.

pub mod commands;
pub mod config;

pub use commands::{run, Outcome};
pub use config::{Command, ConfigError, LoadedConfig, RunConfig};
