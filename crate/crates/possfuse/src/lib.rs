//! File formats, run reports and subcommands behind the `possfuse` binary.
//!
//! The numerical work lives in [`possfuse_core`]; this crate reads JSON
//! documents, calls into the core and renders deterministic reports.

pub mod commands;
pub mod doc;
mod error;
pub mod report;

pub use error::CliError;
