//! Experiment drivers for the regularized p-Stokes preconditioner study:
//! configuration handling, the manufactured-solution, glacier and inf-sup
//! runs, CSV reports and SVG plots.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod report;

pub use config::{Config, Experiment, InfsupDomain, SchurSelection};
pub use error::{LabError, Result};
pub use experiments::{run, run_glacier, run_infsup, run_ms, ErrorRow, InfsupColumn, RunReport};
