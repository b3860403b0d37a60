//! Configuration, experiment orchestration and report emission.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::ExperimentConfig;
pub use experiments::{run, EXPERIMENTS};
pub use report::{emit, Manifest, Report, ReportRow};
