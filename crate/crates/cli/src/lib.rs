//! Command line driver for `moverfv`: configuration, VTK and CSV output,
//! run reports and the validation suite.

// `!(x <= tol)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod table;
pub mod vtk;

pub use config::{parse_config, RunConfiguration};
pub use error::{CliError, CliResult};
