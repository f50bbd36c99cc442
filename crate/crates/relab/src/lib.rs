//! Experiment harness for restricted-eigenvalue certification: config,
//! Monte Carlo runners, and report emission around the `recore` primitives.

pub mod config;
pub mod report;
pub mod runner;
