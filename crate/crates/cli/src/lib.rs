// `!(x < bound)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Command-line surface of the longmem toolkit: CSV and JSON I/O, the
//! subcommand handlers, and the Monte Carlo experiment harnesses.

pub mod commands;
pub mod error;
pub mod experiments;
pub mod io;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult, Kind};
