//! Command-line driver: argument definitions, subcommand drivers and artifact writers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod io;

pub use commands::{run, Cli, CliError};
