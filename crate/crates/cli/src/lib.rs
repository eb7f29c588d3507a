//! Command-line harness for the inverse RL lab: config files, presets, CSV
//! and JSON outputs, verification suites and enumeration oracles.

pub mod brute;
pub mod commands;
pub mod config;
pub mod metrics;
pub mod presets;
pub mod summary;
pub mod verify;
