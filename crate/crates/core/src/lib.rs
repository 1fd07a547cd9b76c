//! Pre-execution slot-time prediction for cloud data warehouse queries.
//!
//! The pipeline scores SQL structure, fuses it with volume, text and
//! categorical features, and routes each query to a gradient-boosted model
//! chosen by its complexity score.

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod gbrt;
pub mod ingest;
pub mod predictor;
pub mod record;
pub mod sql;
pub mod synth;
pub mod timefmt;

pub use error::{Error, Result};
pub use record::QueryRecord;
