//! Experiment harness: config parsing, the grid runner, reports and the
//! single-dataset commands behind the `multiplicity` binary.

pub mod commands;
pub mod config;
pub mod report;
pub mod runner;

pub use config::{parse_config, parse_config_str, ConfigError, DatasetEntry, ExperimentConfig, PipelineOrder};
pub use report::{report, CorrelationUnit, ReportError, ReportMode, ReportOptions};
pub use runner::{cell_seed, read_store, run_experiment, stable_seed, ResultRecord, RunSummary};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG_ERROR: i32 = 1;
    pub const PARTIAL_FAILURE: i32 = 2;
}
