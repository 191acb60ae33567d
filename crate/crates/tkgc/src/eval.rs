//! Evaluation: time-aware-filtered MRR / Hits@k for link prediction and
//! aeIOU for time-interval prediction.
//!
//! Filtering removes, for a query (s, r, ?, T), every candidate other than
//! the gold that is a known true answer at an overlapping time anywhere in
//! train/valid/test. Ties rank at the mean rank of their group; an unscored
//! gold therefore receives the expected rank among all unscored candidates.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::predict::{
    apply_gadgets_link, apply_gadgets_time, fallback_interval, predict_interval, score_link,
    score_time, softmax_probs, LinkQuery, PsiCache, QueryContext, TimeQuery,
};
use crate::tkg::{Entity, Relation, Split, TimeInterval};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkMetrics {
    pub mrr: f64,
    pub hits1: f64,
    pub hits10: f64,
    pub queries: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMetrics {
    pub aeiou: f64,
    pub queries: usize,
    /// Queries answered by the mean-interval fallback (zero groundings).
    pub fallback_queries: usize,
}

/// Affinity-enhanced interval IoU in discrete years: intersection volume
/// (floored at one year) over hull volume.
pub fn aeiou(gold: TimeInterval, predicted: TimeInterval) -> f64 {
    let inter =
        (i64::from(gold.end.min(predicted.end)) - i64::from(gold.start.max(predicted.start)) + 1)
            .max(0);
    let hull =
        i64::from(gold.end.max(predicted.end)) - i64::from(gold.start.min(predicted.start)) + 1;
    inter.max(1) as f64 / hull as f64
}

fn overlaps(a: TimeInterval, b: TimeInterval) -> bool {
    a.start <= b.end && b.start <= a.end
}

/// Rank of `gold` among unfiltered candidates: one plus the number of
/// strictly better candidates, plus half the number of equal ones.
pub fn filtered_rank<F: Fn(usize) -> bool>(scores: &[f64], gold: usize, is_filtered: F) -> f64 {
    let gold_score = scores[gold];
    let mut better = 0usize;
    let mut equal = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if i == gold || is_filtered(i) {
            continue;
        }
        if s > gold_score {
            better += 1;
        } else if s == gold_score {
            equal += 1;
        }
    }
    better as f64 + 1.0 + equal as f64 / 2.0
}

/// Known-true (object, interval) pairs per (subject, relation) across all
/// three splits, for time-aware filtering.
pub fn build_filter_index(
    ctx: &QueryContext,
) -> HashMap<(Entity, Relation), Vec<(Entity, TimeInterval)>> {
    let mut index: HashMap<(Entity, Relation), Vec<(Entity, TimeInterval)>> = HashMap::new();
    for split in [Split::Train, Split::Valid, Split::Test] {
        for q in ctx.dataset.split(split) {
            index
                .entry((q.subject, q.relation))
                .or_default()
                .push((q.object, q.interval));
        }
    }
    index
}

/// Time-aware-filtered MRR / Hits@1 / Hits@10 over all queries of a split
/// (the augmented split carries both query directions). Scoring reads only
/// the train graph; eval facts are used for filtering alone.
pub fn eval_link(ctx: &QueryContext, psi: &PsiCache, split: Split) -> LinkMetrics {
    let filter = build_filter_index(ctx);
    let quads = ctx.dataset.split(split);
    let ranks: Vec<f64> = quads
        .par_iter()
        .map(|quad| {
            let q = LinkQuery {
                subject: quad.subject,
                relation: quad.relation,
                interval: quad.interval,
            };
            let mut table = score_link(ctx, psi, &q);
            apply_gadgets_link(ctx, &mut table, &q, &[]);
            let mut filtered = vec![false; table.scores.len()];
            if let Some(known) = filter.get(&(q.subject, q.relation)) {
                for &(o, t) in known {
                    if o != quad.object && overlaps(t, q.interval) {
                        filtered[o.idx()] = true;
                    }
                }
            }
            filtered_rank(&table.scores, quad.object.idx(), |i| filtered[i])
        })
        .collect();

    let n = ranks.len().max(1) as f64;
    LinkMetrics {
        mrr: ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n,
        hits1: ranks.iter().filter(|&&r| r <= 1.0).count() as f64 / n,
        hits10: ranks.iter().filter(|&&r| r <= 10.0).count() as f64 / n,
        queries: ranks.len(),
    }
}

/// Mean best-match aeIOU over the distinct (s, r, o) queries of a split.
/// Zero-grounding queries fall back to the relation's mean interval.
pub fn eval_time(ctx: &QueryContext, psi: &PsiCache, split: Split) -> TimeMetrics {
    // dedupe queries in split order, collecting every gold interval
    let mut order: Vec<TimeQuery> = Vec::new();
    let mut golds: HashMap<TimeQuery, Vec<TimeInterval>> = HashMap::new();
    for quad in ctx.dataset.split(split) {
        let q = TimeQuery {
            subject: quad.subject,
            relation: quad.relation,
            object: quad.object,
        };
        let entry = golds.entry(q).or_default();
        if entry.is_empty() {
            order.push(q);
        }
        entry.push(quad.interval);
    }

    let scored: Vec<(f64, bool)> = order
        .par_iter()
        .map(|q| {
            let (mut ts, mut te) = score_time(ctx, psi, q);
            apply_gadgets_time(ctx, &mut ts, &mut te, q, &[]);
            let (predicted, fell_back) = if ts.is_all_zero() && te.is_all_zero() {
                (
                    fallback_interval(q.relation, &ctx.stats.relation_means, ctx.vocab),
                    true,
                )
            } else {
                let pb = softmax_probs(&ts.scores);
                let pe = softmax_probs(&te.scores);
                match predict_interval(&pb, &pe, ctx.vocab) {
                    Some(t) => (t, false),
                    None => (
                        fallback_interval(q.relation, &ctx.stats.relation_means, ctx.vocab),
                        true,
                    ),
                }
            };
            let best = golds[q]
                .iter()
                .map(|&g| aeiou(g, predicted))
                .fold(f64::NEG_INFINITY, f64::max);
            (best, fell_back)
        })
        .collect();

    let n = scored.len().max(1) as f64;
    TimeMetrics {
        aeiou: scored.iter().map(|(a, _)| a).sum::<f64>() / n,
        queries: scored.len(),
        fallback_queries: scored.iter().filter(|(_, f)| *f).count(),
    }
}
