//! Command-line front end for `marginkit-core`: reads fundamentals and price
//! CSVs, runs the valuation pipeline per asset and writes flat JSON or CSV
//! reports.
//!
//! Exit codes are 0 on success, 2 for input errors and 3 for numerical
//! failures; see [`error::CliError::exit_code`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod run;

pub use config::{Format, LoadedConfig, RunConfig};
pub use error::CliError;
pub use run::{execute, Command, Overrides};
