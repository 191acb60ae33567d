//! Gaussian statistics fitted on the train split: relation-pair start/end
//! gap parameters for the time path score, the two gadget distributions
//! (relation recurrence and relation pairs), and per-relation fallback means
//! in vocabulary-id space.
//!
//! All standard deviations are clamped to [`SIGMA_FLOOR`] so constant or
//! single-sample gaps never produce degenerate spikes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::tkg::{Quadruple, Relation, TimeVocab, TkgDataset};

/// Minimum fitted standard deviation, in years.
pub const SIGMA_FLOOR: f64 = 1.0;

/// Mean / standard deviation of a gap distribution, with its sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapStats {
    pub mean: f64,
    pub sd: f64,
    pub count: u64,
}

impl GapStats {
    fn from_moments(count: u64, sum: f64, sumsq: f64) -> Self {
        let n = count as f64;
        let mean = sum / n;
        let var = (sumsq / n - mean * mean).max(0.0);
        GapStats {
            mean,
            sd: var.sqrt().max(SIGMA_FLOOR),
            count,
        }
    }
}

#[derive(Default)]
struct Accum {
    count: u64,
    sum: f64,
    sumsq: f64,
}

impl Accum {
    fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sumsq += x * x;
    }

    fn stats(&self) -> Option<GapStats> {
        (self.count > 0).then(|| GapStats::from_moments(self.count, self.sum, self.sumsq))
    }
}

/// Normal density N(gap | mean, sd).
pub fn gaussian_density(gap: f64, mean: f64, sd: f64) -> f64 {
    debug_assert!(sd > 0.0);
    let z = (gap - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

fn lookup<K: Ord + Copy, V: Copy>(sorted: &[(K, V)], key: K) -> Option<V> {
    sorted
        .binary_search_by(|(k, _)| k.cmp(&key))
        .ok()
        .map(|i| sorted[i].1)
}

/// Per relation-pair Gaussian parameters for start-time and end-time gaps.
///
/// The sample for key `(a, b)` on a shared subject is
/// `t(fact with relation a) - t(fact with relation b)` over all ordered
/// pairs of distinct facts; a global fallback over all samples covers pairs
/// unseen in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    start: Vec<((Relation, Relation), GapStats)>,
    end: Vec<((Relation, Relation), GapStats)>,
    global_start: GapStats,
    global_end: GapStats,
}

impl PairStats {
    pub fn start_gap(&self, head: Relation, first: Relation) -> GapStats {
        lookup(&self.start, (head, first)).unwrap_or(self.global_start)
    }

    pub fn end_gap(&self, head: Relation, first: Relation) -> GapStats {
        lookup(&self.end, (head, first)).unwrap_or(self.global_end)
    }

    pub fn has_pair(&self, head: Relation, first: Relation) -> bool {
        lookup(&self.start, (head, first)).is_some()
    }

    pub fn num_pairs(&self) -> usize {
        self.start.len()
    }
}

const EMPTY_GLOBAL: GapStats = GapStats {
    mean: 0.0,
    sd: SIGMA_FLOOR,
    count: 0,
};

/// Fit start/end gap statistics over co-occurring relation pairs on shared
/// subjects, train split only.
pub fn fit_pair_stats(dataset: &TkgDataset) -> PairStats {
    let groups = facts_by_subject(&dataset.train);
    let mut start_acc: HashMap<(Relation, Relation), Accum> = HashMap::new();
    let mut end_acc: HashMap<(Relation, Relation), Accum> = HashMap::new();
    let mut global_start = Accum::default();
    let mut global_end = Accum::default();
    for facts in groups.values() {
        for (i, f) in facts.iter().enumerate() {
            for (j, g) in facts.iter().enumerate() {
                if i == j {
                    continue;
                }
                let key = (f.relation, g.relation);
                let ds = f64::from(f.interval.start) - f64::from(g.interval.start);
                let de = f64::from(f.interval.end) - f64::from(g.interval.end);
                start_acc.entry(key).or_default().push(ds);
                end_acc.entry(key).or_default().push(de);
                global_start.push(ds);
                global_end.push(de);
            }
        }
    }
    PairStats {
        start: collect_sorted(start_acc),
        end: collect_sorted(end_acc),
        global_start: global_start.stats().unwrap_or(EMPTY_GLOBAL),
        global_end: global_end.stats().unwrap_or(EMPTY_GLOBAL),
    }
}

fn collect_sorted<K: Ord>(acc: HashMap<K, Accum>) -> Vec<(K, GapStats)> {
    let mut v: Vec<(K, GapStats)> = acc
        .into_iter()
        .filter_map(|(k, a)| a.stats().map(|s| (k, s)))
        .collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

fn facts_by_subject(quads: &[Quadruple]) -> HashMap<crate::tkg::Entity, Vec<&Quadruple>> {
    let mut groups: HashMap<crate::tkg::Entity, Vec<&Quadruple>> = HashMap::new();
    for q in quads {
        groups.entry(q.subject).or_default().push(q);
    }
    groups
}

/// The two numeric gadget distributions plus their ensembling coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GadgetStats {
    pub eta: f64,
    /// Per relation: gaps between successive start times of facts sharing
    /// (subject, relation), chronological order.
    recurrence: Vec<(Relation, GapStats)>,
    /// Start-time gaps of facts sharing a subject, keyed (relation of the
    /// first fact, relation of the second).
    pairs: Vec<((Relation, Relation), GapStats)>,
}

impl GadgetStats {
    pub fn recurrence(&self, r: Relation) -> Option<GapStats> {
        lookup(&self.recurrence, r)
    }

    pub fn pair(&self, a: Relation, b: Relation) -> Option<GapStats> {
        lookup(&self.pairs, (a, b))
    }
}

/// Fit both gadget distributions on the train split.
pub fn fit_gadget_stats(dataset: &TkgDataset, eta: f64) -> GadgetStats {
    let mut by_subject_rel: HashMap<(crate::tkg::Entity, Relation), Vec<&Quadruple>> =
        HashMap::new();
    for q in &dataset.train {
        by_subject_rel
            .entry((q.subject, q.relation))
            .or_default()
            .push(q);
    }
    let mut rec_acc: HashMap<Relation, Accum> = HashMap::new();
    for ((_, r), mut facts) in by_subject_rel {
        if facts.len() < 2 {
            continue;
        }
        facts.sort_by_key(|q| (q.interval.start, q.interval.end, q.object));
        for w in facts.windows(2) {
            let gap = f64::from(w[1].interval.start) - f64::from(w[0].interval.start);
            rec_acc.entry(r).or_default().push(gap);
        }
    }

    let pair = fit_pair_stats(dataset);
    GadgetStats {
        eta,
        recurrence: collect_sorted(rec_acc),
        pairs: pair.start,
    }
}

/// Per-relation mean start id and mean offset id (the fallback
/// means, computed in assigned-id space).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationMeans {
    per_relation: Vec<Option<(f64, f64)>>,
    global: (f64, f64),
}

impl RelationMeans {
    /// (mean_start_id, mean_offset_id) for `r`, falling back to the global
    /// means when the relation never occurs in training.
    pub fn lookup(&self, r: Relation) -> (f64, f64) {
        self.per_relation
            .get(r.idx())
            .copied()
            .flatten()
            .unwrap_or(self.global)
    }

    pub fn has(&self, r: Relation) -> bool {
        self.per_relation.get(r.idx()).copied().flatten().is_some()
    }
}

/// Mean start and offset per relation over the train split, in id space.
pub fn fit_relation_means(dataset: &TkgDataset, vocab: &TimeVocab) -> RelationMeans {
    let mut sums = vec![(0.0f64, 0.0f64, 0u64); dataset.num_relations()];
    let mut global = (0.0f64, 0.0f64, 0u64);
    for q in &dataset.train {
        let sid = vocab.id_of(q.interval.start).expect("train year in vocab") as f64;
        let eid = vocab.id_of(q.interval.end).expect("train year in vocab") as f64;
        let offset = eid - sid;
        let slot = &mut sums[q.relation.idx()];
        slot.0 += sid;
        slot.1 += offset;
        slot.2 += 1;
        global.0 += sid;
        global.1 += offset;
        global.2 += 1;
    }
    let per_relation = sums
        .into_iter()
        .map(|(s, o, n)| (n > 0).then(|| (s / n as f64, o / n as f64)))
        .collect();
    let g = if global.2 > 0 {
        (global.0 / global.2 as f64, global.1 / global.2 as f64)
    } else {
        (0.0, 0.0)
    };
    RelationMeans {
        per_relation,
        global: g,
    }
}

/// Everything fitted from the train split, persisted with the checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub pair: PairStats,
    pub gadgets: GadgetStats,
    pub relation_means: RelationMeans,
}

pub fn fit_statistics(dataset: &TkgDataset, vocab: &TimeVocab, eta: f64) -> Statistics {
    Statistics {
        pair: fit_pair_stats(dataset),
        gadgets: fit_gadget_stats(dataset, eta),
        relation_means: fit_relation_means(dataset, vocab),
    }
}
