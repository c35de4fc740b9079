//! Experiment runner for the consensus simulator: golden replay of the
//! built-in reference network, single seeded runs, and multi-run
//! statistical campaigns with aggregate reports.

pub mod batch;
pub mod config;
pub mod demo;
pub mod output;
pub mod runner;
pub mod values;
