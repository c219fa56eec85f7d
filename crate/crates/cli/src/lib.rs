//! Experiment runner behind the `smallcost` binary: JSON configs in, CSV
//! tables and JSON reports out.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::run;
pub use config::{load, parse, ExperimentConfig, LoadedConfig};
