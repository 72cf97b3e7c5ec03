//! Library side of the command-line front end, split out so integration
//! tests can drive commands and the HTTP service in-process.

pub mod commands;
pub mod config;
pub mod http;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}
