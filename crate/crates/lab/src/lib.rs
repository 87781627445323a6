//! Experiment runner, report formats and acceptance suite on top of
//! `mixlab-core`.

pub mod config;
pub mod report;
pub mod run;
pub mod verify;
