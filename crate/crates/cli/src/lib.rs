//! Command-line front end for `conerepair`: problem files, reports, and
//! generators for the landing and arbitrage examples.

pub mod commands;
pub mod error;
pub mod format;
pub mod generate;

pub use error::CliError;
pub use format::{parse, serialize, Problem};
