//! Temporal knowledge-graph completion with Allen-algebra logic rules.
//!
//! The pipeline: ingest an interval-stamped TKG, mine temporal rules by
//! exhaustive bounded walks over the train graph, attach symbolic PCA
//! confidences, learn neural rule scores (a GRU over the rule body plus
//! per-relation head vectors), and answer link-prediction and time-interval
//! queries with human-readable rule explanations.

pub mod allen;
pub mod checkpoint;
pub mod error;
pub mod eval;
pub mod predict;
pub mod rules;
pub mod scorer;
pub mod stats;
pub mod tkg;
pub mod train;

pub use error::{Result, TkgcError};
