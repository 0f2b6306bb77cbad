// SPDX-License-Identifier: Apache-2.0

//! Batch front end: flat TOML configs in, CSV tables and a JSON manifest out.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run_command, CliError, Command, Flags};
pub use config::{parse_config, parse_str, ConfigError, FreqGrid, RunConfig};
