//! Configuration ingestion, experiment orchestration and CSV/JSON output for
//! the `dtc` command-line tool.

pub mod commands;
pub mod config;
pub mod invariants;
pub mod output;
pub mod sweep;

pub use config::{parse_config, parse_config_for, Format, Mode, RunSpec};
