//! Detection of Bitcoin Ponzi schemes from a transaction log.
//!
//! The pipeline runs `chain` (ingest) → `cluster` (multi-input heuristic) →
//! `features` → `dataset` → `learn` / `eval` / `rank`. `synth` generates
//! labeled logs for end-to-end testing.

pub mod chain;
pub mod cluster;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod learn;
pub mod rank;
pub mod seed;
pub mod synth;

pub use dataset::{Dataset, Label, Schema};
