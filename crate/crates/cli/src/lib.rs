//! Experiment harness behind the `spcafs` command-line tool.
//!
//! Each command has a library entry point returning a serializable report, so
//! the binary only parses flags, loads data and writes files.

// Parameter checks use `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod options;
pub mod report;
pub mod seeds;
pub mod select;
pub mod sweep;
pub mod trace;

pub use error::CliError;

pub type Result<T> = std::result::Result<T, CliError>;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;
