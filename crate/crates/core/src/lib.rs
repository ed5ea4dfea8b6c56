//! Metric suite, personality inference, prompt construction and the FPx
//! aggregator for evaluating prompt-driven recommenders.
//!
//! Everything here is pure and allocation-only; file and network IO live in
//! the `fairalign` crate.
#![no_std]

extern crate alloc;

pub mod aggregate;
pub mod domain;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod ocean;
pub mod oracle;
pub mod personality;
pub mod prompt;
pub mod recommend;
pub mod tables;
pub mod titles;
