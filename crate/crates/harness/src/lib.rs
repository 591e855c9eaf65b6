//! Experiment harness: scheduler, logs, metrics and campaigns.

pub mod campaign;
pub mod config;
pub mod export;
pub mod log;
pub mod metrics;
pub mod runner;
