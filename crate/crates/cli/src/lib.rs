//! Scenario runner for the `nlt-core` models: validates `key = value`
//! scenario files, evolves the model, evaluates the requested balance-law
//! checks and writes CSV/JSON outputs.

pub mod batch;
pub mod bundled;
pub mod checks;
pub mod config;
pub mod error;
pub mod models;
pub mod report;
pub mod schema;
pub mod sim;

pub use checks::{CheckResult, Verdict};
pub use config::Config;
pub use error::{CliError, Result};
pub use report::{execute, run_to_dir, RunReport};
pub use schema::Scenario;
