//! Config-driven experiments over `pcsft-core`, with JSON/CSV reports.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ConfigError, ConfigIssue, Experiment, ExperimentConfig};
pub use experiments::run_experiment;
pub use report::{emit_report, Format, Report, Rule, SeedResult, Verdict};
