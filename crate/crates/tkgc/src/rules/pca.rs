//! Symbolic PCA (partial closed world) rule confidences.
//!
//! Link form: among (s, o, T) triples with a body grounding from (s, T) to
//! o, the fraction whose head fact is a known positive, counting only
//! triples where s has *some* positive head fact at T. Time form mirrors
//! this per start (or end) year, with candidate years projected from the
//! first-hop interval through the rule's leading Allen tag.

use std::collections::{BTreeSet, HashMap};

use crate::allen::{candidate_end_range, candidate_start_range};
use crate::error::Result;
use crate::tkg::{
    build_time_vocab, Entity, Relation, TimeInterval, TimeVocab, TkgDataset, WalkGraph, Year,
};

use super::ground::{ground_link, ground_time};
use super::TemporalRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeTarget {
    Start,
    End,
}

/// Train-split indexes shared by the PCA computations of all rules.
pub struct PcaContext<'a> {
    graph: &'a WalkGraph,
    vocab: TimeVocab,
    /// (s, r) -> positive (T, o) facts, train split only.
    by_subject: HashMap<(Entity, Relation), Vec<(TimeInterval, Entity)>>,
}

impl<'a> PcaContext<'a> {
    pub fn new(dataset: &'a TkgDataset, graph: &'a WalkGraph) -> Result<Self> {
        let vocab = build_time_vocab(dataset)?;
        Self::with_vocab(dataset, graph, vocab)
    }

    pub fn with_vocab(
        dataset: &'a TkgDataset,
        graph: &'a WalkGraph,
        vocab: TimeVocab,
    ) -> Result<Self> {
        let mut by_subject: HashMap<(Entity, Relation), Vec<(TimeInterval, Entity)>> =
            HashMap::new();
        for q in &dataset.train {
            by_subject
                .entry((q.subject, q.relation))
                .or_default()
                .push((q.interval, q.object));
        }
        Ok(Self {
            graph,
            vocab,
            by_subject,
        })
    }

    pub fn vocab(&self) -> &TimeVocab {
        &self.vocab
    }
}

/// `#(s,o,T): grounded ∧ (s,r_h,o,T) positive` over
/// `#(s,o,T): grounded ∧ ∃o'. (s,r_h,o',T) positive`; 0 when the
/// denominator is empty.
pub fn pca_score_link(rule: &TemporalRule, ctx: &PcaContext) -> f64 {
    let mut num = 0u64;
    let mut den = 0u64;
    for ((subject, relation), facts) in &ctx.by_subject {
        if *relation != rule.head {
            continue;
        }
        // group positives by interval: each (s, T) is one grounding query
        let mut by_interval: HashMap<TimeInterval, BTreeSet<Entity>> = HashMap::new();
        for &(t, o) in facts {
            by_interval.entry(t).or_default().insert(o);
        }
        for (t, positives) in by_interval {
            let reached = ground_link(ctx.graph, *subject, t, &rule.body, &[]);
            den += reached.len() as u64;
            num += reached.keys().filter(|o| positives.contains(o)).count() as u64;
        }
    }
    ratio(num, den)
}

/// Per-instance PCA: `#(s,o,t): t candidate under some grounding ∧ some
/// positive (s,r_h,o,T) has that start (resp. end)` over
/// `#(s,o,t): t candidate ∧ ∃T'. (s,r_h,o,T') positive`.
pub fn pca_score_time(rule: &TemporalRule, ctx: &PcaContext, target: TimeTarget) -> f64 {
    let mut num = 0u64;
    let mut den = 0u64;
    for ((subject, relation), facts) in &ctx.by_subject {
        if *relation != rule.head {
            continue;
        }
        // group positives by object: (s, o) pairs with their true instants
        let mut by_object: HashMap<Entity, BTreeSet<Year>> = HashMap::new();
        for &(t, o) in facts {
            let instant = match target {
                TimeTarget::Start => t.start,
                TimeTarget::End => t.end,
            };
            by_object.entry(o).or_default().insert(instant);
        }
        for (object, true_instants) in by_object {
            let mut first_hops = ground_time(ctx.graph, *subject, object, &rule.body, &[]);
            first_hops.sort_unstable();
            first_hops.dedup();
            let mut candidates: BTreeSet<Year> = BTreeSet::new();
            for t2 in first_hops {
                let range = match target {
                    TimeTarget::Start => candidate_start_range(rule.body[0].0, t2, &ctx.vocab),
                    TimeTarget::End => candidate_end_range(rule.body[0].0, t2, &ctx.vocab),
                };
                candidates.extend(range);
            }
            den += candidates.len() as u64;
            num += candidates
                .iter()
                .filter(|t| true_instants.contains(t))
                .count() as u64;
        }
    }
    ratio(num, den)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
