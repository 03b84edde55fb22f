//! `klap` command-line front end: model I/O, passivity checks, passivation
//! runs, Popov scans, H2 distances and the bundled benchmarks.

// NaN-rejecting comparisons are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod error;
pub mod model;
pub mod report;

pub use app::run;
pub use error::CliError;
