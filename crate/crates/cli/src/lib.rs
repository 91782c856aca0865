//! Batch runs and sweeps over benchmark or CSV data, with JSON reports.

pub mod config;
pub mod harness;

pub use config::{DataSource, RunConfig, SweepAxis};
pub use harness::{run, sweep, HarnessError, RunOutput, RunRecord, SweepOutput};
