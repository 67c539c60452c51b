//! Experiment configuration, orchestration and report emission.

pub mod config;
pub mod run;

pub use config::{ExperimentConfig, Mode, Overrides, RhsSpec, SweepSpec, WaveMode};
pub use run::{execute, input_hash, run, RunOutput, RunReport, SolveFailure, SolveSummary, Timing, REPORT_SCHEMA_VERSION};
