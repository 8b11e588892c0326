//! Verification harness for the `carlab-core` kernels: configuration,
//! named suites, convergence sweeps and report emitters.

pub mod cli;
pub mod config;
pub mod error;
pub mod report;
pub mod rng;
pub mod suites;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::HarnessError;
pub use report::{CheckRecord, ConvergenceTable, Format, Report, Status, SuiteReport};
pub use suites::{run_report, run_suite, SuiteName};
pub use sweep::{run_sweep, SweepTarget};
