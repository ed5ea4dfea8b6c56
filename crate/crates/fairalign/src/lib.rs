//! Batch harness measuring how prompt-driven recommenders trade personality
//! alignment against demographic fairness.
//!
//! IO, configuration, backends and report files live here; the metric and
//! inference core is re-exported as [`core`].

pub use fairalign_core as core;

pub mod backend;
pub mod cli;
pub mod config;
pub mod datasets;
pub mod harness;
pub mod interchange;
pub mod report;
pub mod synthetic;
