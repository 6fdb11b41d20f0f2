//! Library side of the `epiext` command: configuration and subcommands.

pub mod commands;
pub mod config;
