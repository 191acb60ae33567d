//! Query answering: rule grounding, candidate-score aggregation, Gaussian
//! time path scores, softmax probabilities, gadget adjustment, interval
//! assembly, and the mean-interval fallback.
//!
//! Link scoring sums, over every rule with the query's head relation and
//! every grounded path, the rule's learned confidence psi (the path factor is
//! 1 per path). Time scoring leaves the head interval unknown: each partial
//! grounding projects candidate years through the rule's leading Allen tag
//! and weighs them with a normalized Gaussian over the gap to the first body
//! fact's start (or end) time.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::allen::{candidate_end_range, candidate_start_range, AllenRelation};
use crate::error::{Result, TkgcError};
use crate::rules::{
    find_link_grounding, find_time_grounding, ground_link, ground_time, RuleSet, TemporalRule,
};
use crate::scorer::{
    rule_score, rule_score_traced, GruForm, ModelParams, ScoreTarget, TracedRuleScore,
};
use crate::stats::{GapStats, PairStats, RelationMeans, Statistics};
use crate::tkg::{
    Entity, GraphEdge, Relation, TimeInterval, TimeVocab, TkgDataset, WalkGraph, Year,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkQuery {
    pub subject: Entity,
    pub relation: Relation,
    pub interval: TimeInterval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeQuery {
    pub subject: Entity,
    pub relation: Relation,
    pub object: Entity,
}

/// One rule's share of a candidate's score: `psi * weight`, where the weight
/// is the path count (link) or the summed normalized path masses (time).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub rule_idx: usize,
    pub weight: f64,
    pub psi: f64,
}

impl Contribution {
    pub fn value(&self) -> f64 {
        self.psi * self.weight
    }
}

/// Dense scores over a candidate domain (entities, or vocabulary years by
/// id) plus the contributing rules per touched candidate.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    pub scores: Vec<f64>,
    pub contributions: HashMap<usize, Vec<Contribution>>,
}

impl ScoreTable {
    fn new(len: usize) -> Self {
        ScoreTable {
            scores: vec![0.0; len],
            contributions: HashMap::new(),
        }
    }

    fn add(&mut self, candidate: usize, c: Contribution) {
        self.scores[candidate] += c.value();
        self.contributions.entry(candidate).or_default().push(c);
    }

    pub fn is_all_zero(&self) -> bool {
        self.scores.iter().all(|&s| s == 0.0)
    }
}

/// Immutable read-side bundle shared by every query.
pub struct QueryContext<'a> {
    pub dataset: &'a TkgDataset,
    pub graph: &'a WalkGraph,
    pub vocab: &'a TimeVocab,
    pub rules: &'a RuleSet,
    pub stats: &'a Statistics,
    /// Train quad ids per subject, for the gadget features.
    subject_history: Vec<Vec<usize>>,
}

impl<'a> QueryContext<'a> {
    pub fn new(
        dataset: &'a TkgDataset,
        graph: &'a WalkGraph,
        vocab: &'a TimeVocab,
        rules: &'a RuleSet,
        stats: &'a Statistics,
    ) -> Self {
        let mut subject_history = vec![Vec::new(); dataset.num_entities()];
        for (i, q) in dataset.train.iter().enumerate() {
            subject_history[q.subject.idx()].push(i);
        }
        QueryContext {
            dataset,
            graph,
            vocab,
            rules,
            stats,
            subject_history,
        }
    }
}

/// Learned rule confidences for every rule and target, frozen for
/// inference-time scoring.
#[derive(Debug, Clone)]
pub struct PsiCache {
    pub object: Vec<f64>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

pub fn compute_psi_cache(params: &ModelParams, form: GruForm, rules: &RuleSet) -> Result<PsiCache> {
    let mut object = Vec::with_capacity(rules.len());
    let mut start = Vec::with_capacity(rules.len());
    let mut end = Vec::with_capacity(rules.len());
    for sr in rules.rules() {
        object.push(rule_score(
            params,
            form,
            &sr.rule,
            ScoreTarget::Object,
            sr.pca_link,
        )?);
        start.push(rule_score(
            params,
            form,
            &sr.rule,
            ScoreTarget::Start,
            sr.pca_start,
        )?);
        end.push(rule_score(
            params,
            form,
            &sr.rule,
            ScoreTarget::End,
            sr.pca_end,
        )?);
    }
    Ok(PsiCache { object, start, end })
}

/// Grounding of one specific rule for a link query. The rule's head must
/// match the query relation.
pub fn ground_rule_link(
    ctx: &QueryContext,
    q: &LinkQuery,
    rule: &TemporalRule,
) -> Result<HashMap<Entity, u64>> {
    if rule.head != q.relation {
        return Err(TkgcError::HeadMismatch {
            rule_head: ctx.dataset.relation_name(rule.head).to_string(),
            query: ctx.dataset.relation_name(q.relation).to_string(),
        });
    }
    Ok(ground_link(
        ctx.graph,
        q.subject,
        q.interval,
        &rule.body,
        &[],
    ))
}

fn fired_link_rules(
    ctx: &QueryContext,
    q: &LinkQuery,
    exclude: &[usize],
) -> Vec<(usize, HashMap<Entity, u64>)> {
    ctx.rules
        .for_head(q.relation)
        .iter()
        .filter_map(|&ri| {
            let counts = ground_link(
                ctx.graph,
                q.subject,
                q.interval,
                &ctx.rules.get(ri).rule.body,
                exclude,
            );
            (!counts.is_empty()).then_some((ri, counts))
        })
        .collect()
}

/// Eq.-2 score table over all entities, using frozen psi values.
pub fn score_link(ctx: &QueryContext, psi: &PsiCache, q: &LinkQuery) -> ScoreTable {
    let mut table = ScoreTable::new(ctx.dataset.num_entities());
    for (ri, counts) in fired_link_rules(ctx, q, &[]) {
        for (o, c) in counts {
            table.add(
                o.idx(),
                Contribution {
                    rule_idx: ri,
                    weight: c as f64,
                    psi: psi.object[ri],
                },
            );
        }
    }
    table
}

/// One rule that fired for a training query, with everything backprop needs.
pub struct LinkFiring {
    pub rule_idx: usize,
    pub scored: TracedRuleScore,
    pub counts: HashMap<Entity, u64>,
}

/// Training-time forward pass: scores plus traced psi per fired rule.
/// `exclude` removes the query's own quadruple (and twin) from grounding.
pub fn score_link_traced(
    ctx: &QueryContext,
    params: &ModelParams,
    form: GruForm,
    q: &LinkQuery,
    exclude: &[usize],
) -> Result<(ScoreTable, Vec<LinkFiring>)> {
    let mut table = ScoreTable::new(ctx.dataset.num_entities());
    let mut fired = Vec::new();
    for (ri, counts) in fired_link_rules(ctx, q, exclude) {
        let sr = ctx.rules.get(ri);
        let scored = rule_score_traced(params, form, &sr.rule, ScoreTarget::Object, sr.pca_link)?;
        for (&o, &c) in &counts {
            table.add(
                o.idx(),
                Contribution {
                    rule_idx: ri,
                    weight: c as f64,
                    psi: scored.psi,
                },
            );
        }
        fired.push(LinkFiring {
            rule_idx: ri,
            scored,
            counts,
        });
    }
    Ok((table, fired))
}

/// Normalized per-path candidate weights for one partial grounding: the
/// Gaussian density of the gap between the candidate year and the first body
/// fact's start (or end), normalized over the candidate set. Computed in log
/// space so extreme gaps cannot underflow to an all-zero path.
pub fn path_score_time(
    a1: AllenRelation,
    t2: TimeInterval,
    head: Relation,
    first: Relation,
    stats: &PairStats,
    vocab: &TimeVocab,
    target: TimeScoreKind,
) -> Vec<(Year, f64)> {
    let (candidates, anchor, gap_stats) = match target {
        TimeScoreKind::Start => (
            candidate_start_range(a1, t2, vocab),
            t2.start,
            stats.start_gap(head, first),
        ),
        TimeScoreKind::End => (
            candidate_end_range(a1, t2, vocab),
            t2.end,
            stats.end_gap(head, first),
        ),
    };
    normalize_gaussian(&candidates, anchor, gap_stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScoreKind {
    Start,
    End,
}

fn normalize_gaussian(candidates: &[Year], anchor: Year, g: GapStats) -> Vec<(Year, f64)> {
    if candidates.is_empty() {
        return Vec::new();
    }
    // log N(t - anchor | mean, sd) up to the shared additive constant
    let logs: Vec<f64> = candidates
        .iter()
        .map(|&t| {
            let z = (f64::from(t) - f64::from(anchor) - g.mean) / g.sd;
            -0.5 * z * z
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    candidates
        .iter()
        .zip(weights)
        .map(|(&t, w)| (t, w / z))
        .collect()
}

/// Per-rule aggregated candidate-year masses for a time query.
pub struct TimeFiring {
    pub rule_idx: usize,
    /// vocab id -> summed normalized path mass, start table.
    pub start_mass: HashMap<usize, f64>,
    pub end_mass: HashMap<usize, f64>,
    pub scored_start: Option<TracedRuleScore>,
    pub scored_end: Option<TracedRuleScore>,
}

fn fired_time_rules(ctx: &QueryContext, q: &TimeQuery, exclude: &[usize]) -> Vec<TimeFiring> {
    let mut out = Vec::new();
    for &ri in ctx.rules.for_head(q.relation) {
        let rule = &ctx.rules.get(ri).rule;
        let hops = ground_time(ctx.graph, q.subject, q.object, &rule.body, exclude);
        if hops.is_empty() {
            continue;
        }
        let mut start_mass: HashMap<usize, f64> = HashMap::new();
        let mut end_mass: HashMap<usize, f64> = HashMap::new();
        for t2 in hops {
            for (year, phi) in path_score_time(
                rule.body[0].0,
                t2,
                q.relation,
                rule.body[0].1,
                &ctx.stats.pair,
                ctx.vocab,
                TimeScoreKind::Start,
            ) {
                *start_mass
                    .entry(ctx.vocab.id_of(year).expect("candidate in vocab"))
                    .or_insert(0.0) += phi;
            }
            for (year, phi) in path_score_time(
                rule.body[0].0,
                t2,
                q.relation,
                rule.body[0].1,
                &ctx.stats.pair,
                ctx.vocab,
                TimeScoreKind::End,
            ) {
                *end_mass
                    .entry(ctx.vocab.id_of(year).expect("candidate in vocab"))
                    .or_insert(0.0) += phi;
            }
        }
        if start_mass.is_empty() && end_mass.is_empty() {
            continue;
        }
        out.push(TimeFiring {
            rule_idx: ri,
            start_mass,
            end_mass,
            scored_start: None,
            scored_end: None,
        });
    }
    out
}

/// Score tables over the year vocabulary for the start and end instants.
pub fn score_time(ctx: &QueryContext, psi: &PsiCache, q: &TimeQuery) -> (ScoreTable, ScoreTable) {
    let n = ctx.vocab.len();
    let mut start = ScoreTable::new(n);
    let mut end = ScoreTable::new(n);
    for firing in fired_time_rules(ctx, q, &[]) {
        let ri = firing.rule_idx;
        for (&year_id, &mass) in &firing.start_mass {
            start.add(
                year_id,
                Contribution {
                    rule_idx: ri,
                    weight: mass,
                    psi: psi.start[ri],
                },
            );
        }
        for (&year_id, &mass) in &firing.end_mass {
            end.add(
                year_id,
                Contribution {
                    rule_idx: ri,
                    weight: mass,
                    psi: psi.end[ri],
                },
            );
        }
    }
    (start, end)
}

/// Training-time forward for a time query, with traced psi per fired rule.
pub fn score_time_traced(
    ctx: &QueryContext,
    params: &ModelParams,
    form: GruForm,
    q: &TimeQuery,
    exclude: &[usize],
) -> Result<(ScoreTable, ScoreTable, Vec<TimeFiring>)> {
    let n = ctx.vocab.len();
    let mut start = ScoreTable::new(n);
    let mut end = ScoreTable::new(n);
    let mut fired = fired_time_rules(ctx, q, exclude);
    for firing in &mut fired {
        let sr = ctx.rules.get(firing.rule_idx);
        let scored_start =
            rule_score_traced(params, form, &sr.rule, ScoreTarget::Start, sr.pca_start)?;
        let scored_end = rule_score_traced(params, form, &sr.rule, ScoreTarget::End, sr.pca_end)?;
        for (&year_id, &mass) in &firing.start_mass {
            start.add(
                year_id,
                Contribution {
                    rule_idx: firing.rule_idx,
                    weight: mass,
                    psi: scored_start.psi,
                },
            );
        }
        for (&year_id, &mass) in &firing.end_mass {
            end.add(
                year_id,
                Contribution {
                    rule_idx: firing.rule_idx,
                    weight: mass,
                    psi: scored_end.psi,
                },
            );
        }
        firing.scored_start = Some(scored_start);
        firing.scored_end = Some(scored_end);
    }
    Ok((start, end, fired))
}

/// Numerically stabilized softmax over the full score domain.
pub fn softmax_probs(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Pull `d_loss/d_probs` back through the softmax to `d_loss/d_scores`.
pub fn softmax_backward(probs: &[f64], dprobs: &[f64]) -> Vec<f64> {
    let inner: f64 = probs.iter().zip(dprobs).map(|(p, d)| p * d).sum();
    probs
        .iter()
        .zip(dprobs)
        .map(|(p, d)| p * (d - inner))
        .collect()
}

/// Additive gadget adjustment for a link query: every train fact sharing the
/// query's subject and relation contributes the log recurrence density of
/// the start-time gap to its object's score. No-op when eta is 0 or the
/// subject has no history.
pub fn apply_gadgets_link(
    ctx: &QueryContext,
    table: &mut ScoreTable,
    q: &LinkQuery,
    exclude: &[usize],
) {
    let eta = ctx.stats.gadgets.eta;
    if eta == 0.0 {
        return;
    }
    let Some(rec) = ctx.stats.gadgets.recurrence(q.relation) else {
        return;
    };
    for &qid in &ctx.subject_history[q.subject.idx()] {
        if exclude.contains(&qid) {
            continue;
        }
        let f = &ctx.dataset.train[qid];
        if f.relation != q.relation {
            continue;
        }
        let gap = f64::from(q.interval.start) - f64::from(f.interval.start);
        table.scores[f.object.idx()] += eta * log_density(gap, rec);
    }
}

/// Additive gadget adjustment for a time query: each candidate year is
/// scored against the subject's history via the recurrence distribution
/// (same relation) and the relation-pair distribution (other relations),
/// using start-time gaps for both tables.
pub fn apply_gadgets_time(
    ctx: &QueryContext,
    start: &mut ScoreTable,
    end: &mut ScoreTable,
    q: &TimeQuery,
    exclude: &[usize],
) {
    let eta = ctx.stats.gadgets.eta;
    if eta == 0.0 {
        return;
    }
    let history = &ctx.subject_history[q.subject.idx()];
    if history.is_empty() {
        return;
    }
    for (year_id, year) in ctx.vocab.years().iter().enumerate() {
        let mut term = 0.0;
        let mut any = false;
        for &qid in history {
            if exclude.contains(&qid) {
                continue;
            }
            let f = &ctx.dataset.train[qid];
            let gap = f64::from(*year) - f64::from(f.interval.start);
            let stats = if f.relation == q.relation {
                ctx.stats.gadgets.recurrence(q.relation)
            } else {
                ctx.stats.gadgets.pair(q.relation, f.relation)
            };
            if let Some(g) = stats {
                term += log_density(gap, g);
                any = true;
            }
        }
        if any {
            start.scores[year_id] += eta * term;
            end.scores[year_id] += eta * term;
        }
    }
}

fn log_density(gap: f64, g: GapStats) -> f64 {
    let z = (gap - g.mean) / g.sd;
    -0.5 * z * z - g.sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Argmax of `P(t_b) + P(t_e)` over ordered pairs `t_b <= t_e`, with
/// deterministic ties toward the earliest start then earliest end. `None`
/// when both tables are all-zero.
pub fn predict_interval(p_start: &[f64], p_end: &[f64], vocab: &TimeVocab) -> Option<TimeInterval> {
    debug_assert_eq!(p_start.len(), vocab.len());
    debug_assert_eq!(p_end.len(), vocab.len());
    if p_start.iter().all(|&p| p == 0.0) && p_end.iter().all(|&p| p == 0.0) {
        return None;
    }
    let mut best_start = 0usize;
    let mut best: Option<(f64, usize, usize)> = None;
    for end_id in 0..vocab.len() {
        if p_start[end_id] > p_start[best_start] {
            best_start = end_id;
        }
        let total = p_start[best_start] + p_end[end_id];
        if best.is_none_or(|(b, _, _)| total > b) {
            best = Some((total, best_start, end_id));
        }
    }
    let (_, s, e) = best.expect("non-empty vocab");
    Some(TimeInterval {
        start: vocab.year(s),
        end: vocab.year(e),
    })
}

/// Mean-interval fallback for zero-grounding time queries: the relation's
/// mean start id and mean offset id, rounded and clamped to the vocabulary.
pub fn fallback_interval(r: Relation, means: &RelationMeans, vocab: &TimeVocab) -> TimeInterval {
    let (mean_start, mean_offset) = means.lookup(r);
    let last = vocab.max_id_diff() as f64;
    let sid = mean_start.round().clamp(0.0, last) as usize;
    let eid = (mean_start + mean_offset).round().clamp(0.0, last) as usize;
    TimeInterval {
        start: vocab.year(sid),
        end: vocab.year(eid.max(sid)),
    }
}

/// One ranked explanation: a contributing rule, its share of the answer's
/// score, and one concrete grounding.
#[derive(Debug, Clone)]
pub struct RuleExplanation {
    pub rule_idx: usize,
    pub psi: f64,
    pub weight: f64,
    pub contribution: f64,
    pub grounding: Option<Vec<GraphEdge>>,
}

/// Contributing rules for a link answer, sorted by contribution.
pub fn explain_link(
    ctx: &QueryContext,
    table: &ScoreTable,
    q: &LinkQuery,
    answer: Entity,
) -> Vec<RuleExplanation> {
    let mut out: Vec<RuleExplanation> = table
        .contributions
        .get(&answer.idx())
        .map(|cs| {
            cs.iter()
                .map(|c| RuleExplanation {
                    rule_idx: c.rule_idx,
                    psi: c.psi,
                    weight: c.weight,
                    contribution: c.value(),
                    grounding: find_link_grounding(
                        ctx.graph,
                        q.subject,
                        q.interval,
                        &ctx.rules.get(c.rule_idx).rule.body,
                        answer,
                        &[],
                    ),
                })
                .collect()
        })
        .unwrap_or_default();
    out.sort_by(|a, b| {
        b.contribution
            .total_cmp(&a.contribution)
            .then(a.rule_idx.cmp(&b.rule_idx))
    });
    out
}

/// Contributing rules for a predicted instant of a time query, sorted by
/// contribution to that instant's score.
pub fn explain_time(
    ctx: &QueryContext,
    table: &ScoreTable,
    q: &TimeQuery,
    year: Year,
) -> Vec<RuleExplanation> {
    let Some(year_id) = ctx.vocab.id_of(year) else {
        return Vec::new();
    };
    let mut out: Vec<RuleExplanation> = table
        .contributions
        .get(&year_id)
        .map(|cs| {
            cs.iter()
                .map(|c| {
                    let rule = &ctx.rules.get(c.rule_idx).rule;
                    let hops = ground_time(ctx.graph, q.subject, q.object, &rule.body, &[]);
                    let grounding = hops.first().and_then(|&t2| {
                        find_time_grounding(ctx.graph, q.subject, q.object, &rule.body, t2, &[])
                    });
                    RuleExplanation {
                        rule_idx: c.rule_idx,
                        psi: c.psi,
                        weight: c.weight,
                        contribution: c.value(),
                        grounding,
                    }
                })
                .collect()
        })
        .unwrap_or_default();
    out.sort_by(|a, b| {
        b.contribution
            .total_cmp(&a.contribution)
            .then(a.rule_idx.cmp(&b.rule_idx))
    });
    out
}

/// Render one grounding in the constants-per-variable form, e.g.
/// `E1: Franz, E2: KPD, E3: Kathe, T1: [1920, 1946], T2: [1899, 1974]`.
/// `head_interval` is the query interval for link queries and `None` for
/// (partially grounded) time queries.
pub fn render_grounding(
    ctx: &QueryContext,
    subject: Entity,
    head_interval: Option<TimeInterval>,
    edges: &[GraphEdge],
) -> String {
    let m = edges.len();
    let mut parts = vec![format!("E1: {}", ctx.dataset.entity_name(subject))];
    for (i, e) in edges.iter().enumerate() {
        let var = if i + 1 == m {
            "E2".to_string()
        } else {
            format!("E{}", i + 3)
        };
        parts.push(format!("{}: {}", var, ctx.dataset.entity_name(e.neighbor)));
    }
    if let Some(t1) = head_interval {
        parts.push(format!("T1: {t1}"));
    }
    for (i, e) in edges.iter().enumerate() {
        parts.push(format!("T{}: {}", i + 2, e.interval));
    }
    parts.join(", ")
}
