//! Scenario runner: JSON config in, CSV/JSON result tree out.

pub mod config;
pub mod error;
pub mod run;

pub use config::{apply_override, validate, Diagnostic, ScenarioConfig, Severity};
pub use error::CliError;
pub use run::{run, RunOptions, RunSummary};
