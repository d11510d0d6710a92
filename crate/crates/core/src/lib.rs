//! Penalized-regression solvers and doubly robust average-treatment-effect
//! estimators, with a Monte Carlo harness and bootstrap inference.

pub mod cli;
pub mod data;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod oal;
pub mod penreg;
pub mod report;
pub mod simulation;

pub use error::{Error, Result};
