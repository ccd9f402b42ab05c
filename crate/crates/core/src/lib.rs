//! Multi-task forecasting of coupled cluster telemetry.
//!
//! Each node of a cluster is one task. A shared encoder maps every node's
//! features into a hidden row, the rows are fused with their history, mixed
//! across an inter-node adjacency, gated by input fluctuation and decoded by a
//! shared trunk with one head per task.

pub mod artifact;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod numkit;
pub mod structure;

pub use error::{Error, Result};
