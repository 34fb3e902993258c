//! Config-driven experiment runner behind the `sublaw` binary.

pub mod config;
pub mod experiments;
pub mod instances;
pub mod registry;
pub mod report;

pub use config::{load_config, parse_config, ConfigError, Experiment, ExperimentConfig, Format};
pub use experiments::{run, Outcome, RunError, Status};
pub use report::{encode, ReportRow};
