//! Command-line pipeline around `dicke-core`: run configuration, the
//! on-disk cache, output formats and the subcommands.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod pipeline;
