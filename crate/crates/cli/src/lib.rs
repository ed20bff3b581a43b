//! Scenario runner and experiment harness for relay extremum-seeking
//! control of cooling-tower fans.
//!
//! A scenario file names a weather week, a controller and plant parameters.
//! [`sim::run_scenario`] drives the plant one fixed step at a time and
//! records every step; [`experiments`] builds sweeps, controller comparisons,
//! the impulse test and the degraded-meter study on top of it.

// `!(x > 0)` forms are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod output;
pub mod scenario;
pub mod sim;
pub mod validate;
pub mod weather;

pub use error::{HarnessError, Result};
pub use scenario::{load_scenario, ControllerKind, CostSource, Scenario};
pub use sim::{run_scenario, run_with, ControllerSpec, RunRecord};
