//! Library half of the `mixhit` binary: configuration parsing, the
//! experiment suites, report emission, and the run manifest. Kept as a
//! library so the integration tests can drive runs without shelling out.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod report;

pub use config::Config;
pub use experiments::{run_experiments, RunOutcome};
pub use manifest::RunManifest;
