//! Adjacency view of the train split used for all-walks mining and rule
//! grounding. Each (augmented) train quadruple contributes exactly one edge,
//! so every edge has a reverse twin and walks are bidirectional.

use serde::{Deserialize, Serialize};

use super::{Entity, Relation, TimeInterval, TkgDataset};
use crate::error::{Result, TkgcError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub relation: Relation,
    pub interval: TimeInterval,
    pub neighbor: Entity,
    /// Index of the originating quadruple in the augmented train split.
    pub quad_id: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkGraph {
    edges_from: Vec<Vec<GraphEdge>>,
}

/// Build the adjacency over the train split only.
pub fn build_walk_graph(dataset: &TkgDataset) -> Result<WalkGraph> {
    if !dataset.is_augmented() {
        return Err(TkgcError::NotAugmented);
    }
    let mut edges_from = vec![Vec::new(); dataset.num_entities()];
    for (quad_id, q) in dataset.train.iter().enumerate() {
        edges_from[q.subject.idx()].push(GraphEdge {
            relation: q.relation,
            interval: q.interval,
            neighbor: q.object,
            quad_id,
        });
    }
    Ok(WalkGraph { edges_from })
}

impl WalkGraph {
    pub fn edges_from(&self, e: Entity) -> &[GraphEdge] {
        &self.edges_from[e.idx()]
    }

    pub fn num_edges(&self) -> usize {
        self.edges_from.iter().map(Vec::len).sum()
    }

    pub fn num_nodes(&self) -> usize {
        self.edges_from.len()
    }
}
