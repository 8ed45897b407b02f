//! Experiment plumbing: traces, ensembles, files and the command line.

pub mod aggregate;
pub mod bench;
pub mod cli;
pub mod config;
pub mod io;
pub mod trace;

pub use aggregate::{aggregate, EnsembleRow, TrialEnsemble};
pub use bench::run_bench;
pub use trace::{read_trace, write_trace, RunMeta, RunTrace, TraceRow};
