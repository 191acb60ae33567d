//! Temporal knowledge graph core: quadruples, dataset ingestion, inverse
//! augmentation, the year vocabulary, and the all-walks graph.
//!
//! A TKG is a set of quadruples `(s, r, o, T)` where `T = [t_b, t_e]` is the
//! validity interval of the fact at one-year granularity. Every quadruple has
//! an inverse twin `(o, r^-1, s, T)` after augmentation, which is what makes
//! walks bidirectional.

mod dataset;
mod graph;
mod vocab;

pub use dataset::{load_dataset, NamedFact, TkgDataset, INVERSE_SUFFIX};
pub use graph::{build_walk_graph, GraphEdge, WalkGraph};
pub use vocab::{build_time_vocab, time_distance, TimeVocab};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TkgcError};

/// Calendar year. Negative values are BCE.
pub type Year = i32;

/// Dense entity id, assigned in first-occurrence order during ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entity(pub u32);

/// Dense relation id. Ids `>= num_base_relations` denote inverse relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relation(pub u32);

impl Entity {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl Relation {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

/// Closed year interval `[start, end]` with `start <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start: Year,
    pub end: Year,
}

impl TimeInterval {
    pub fn new(start: Year, end: Year) -> Result<Self> {
        if start > end {
            return Err(TkgcError::InvalidInterval(start, end));
        }
        Ok(Self { start, end })
    }

    /// Number of years covered, inclusive of both endpoints.
    pub fn volume(&self) -> i64 {
        i64::from(self.end) - i64::from(self.start) + 1
    }

    pub fn is_instant(&self) -> bool {
        self.start == self.end
    }
}

impl std::fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

/// One temporal fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Quadruple {
    pub subject: Entity,
    pub relation: Relation,
    pub object: Entity,
    pub interval: TimeInterval,
}

/// Which file a quadruple came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}
