//! Randomized extended multiple row methods for least-squares problems.
//!
//! `solvers` holds the iterations, `theory` the rate constants and oracles,
//! `problems` the test generators and `harness` the trace and CLI plumbing.

pub mod error;
pub mod harness;
pub mod matrix;
pub mod partition;
pub mod problems;
pub mod solvers;
pub mod theory;

pub use error::{Error, Result};
pub use matrix::{Axis, Matrix};
pub use partition::{Partition, RngStream};
pub use solvers::{ExecMode, Method, SolverConfig, StepSize};
