//! Scenario runner for the verification suites.

pub mod generators;
pub mod report;
pub mod scenario;
pub mod suites;

pub use report::{Report, Row};
pub use scenario::{Context, Scenario, Suite};
pub use suites::run_suite;
