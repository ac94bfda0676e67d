//! Scenario runner for the rydcoul library.

pub mod config;
pub mod output;
pub mod run;

pub use config::ScenarioConfig;
pub use output::{verify_manifest, Manifest, OutputSet};
pub use run::{run, RunOptions, SnapshotFormat};
