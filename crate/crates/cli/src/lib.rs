//! Scenario runner: loads a model and a property list, runs the checks from
//! `revcalc-core`, and writes `report.csv` / `report.json`.

pub mod catalog;
pub mod error;
pub mod report;
pub mod runner;
pub mod scenario;

pub use error::CliError;
pub use report::{Report, Row};
pub use runner::{run, run_file, Overrides, RunOutcome};
pub use scenario::{Property, Scenario};
