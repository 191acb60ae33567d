//! Temporal rule mining: all-walks extraction over the train graph, lifting
//! walks to rules, deduplication with support counts, and symbolic PCA
//! confidences.
//!
//! A rule of length m pairs the head relation with an alternating body
//! `A_1 ∧ r_1 ∧ A_2 ∧ r_2 ∧ ... ∧ A_m ∧ r_m`: Allen tag `A_1` relates the
//! head interval to the first body interval, and each later `A_i` relates
//! consecutive body intervals.

mod ground;
mod pca;

pub use ground::{find_link_grounding, find_time_grounding, ground_link, ground_time};
pub use pca::{pca_score_link, pca_score_time, PcaContext, TimeTarget};

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::allen::{classify, AllenRelation};
use crate::error::{Result, TkgcError};
use crate::tkg::{GraphEdge, Quadruple, Relation, TkgDataset, WalkGraph};

/// Lifted temporal rule: head relation plus alternating Allen / KG-relation
/// body of length >= 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TemporalRule {
    pub head: Relation,
    pub body: Vec<(AllenRelation, Relation)>,
}

impl TemporalRule {
    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    /// Render in the logical form with explicit entity/time variables, e.g.
    /// `wBi(E1,E2,T1) <- Before(T1,T2) ∧ iMt(E1,E3,T2) ∧ After(T2,T3) ∧ wBi(E3,E2,T3)`.
    pub fn render(&self, dataset: &TkgDataset) -> String {
        let m = self.body.len();
        let evar = |pos: usize| -> String {
            if pos == 0 {
                "E1".into()
            } else if pos == m {
                "E2".into()
            } else {
                format!("E{}", pos + 2)
            }
        };
        let mut s = format!("{}(E1,E2,T1) <- ", dataset.relation_name(self.head));
        for (i, (allen, rel)) in self.body.iter().enumerate() {
            if i > 0 {
                s.push_str(" ∧ ");
            }
            s.push_str(&format!(
                "{}(T{},T{}) ∧ {}({},{},T{})",
                allen.display_name(),
                i + 1,
                i + 2,
                dataset.relation_name(*rel),
                evar(i),
                evar(i + 1),
                i + 2
            ));
        }
        s
    }
}

/// One concrete walk mined for a head quadruple: the ordered train edges
/// traversed from the head subject to the head object.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundedWalk {
    pub edges: Vec<GraphEdge>,
}

/// Every walk of length 1..=max_len from `head.subject` ending at
/// `head.object`, considering all edges at every hop. Edges whose quadruple
/// id appears in `exclude` (the head quadruple and its inverse twin) are
/// never traversed.
pub fn mine_walks(
    graph: &WalkGraph,
    head: &Quadruple,
    exclude: &[usize],
    max_len: usize,
) -> Vec<GroundedWalk> {
    let mut out = Vec::new();
    let mut path: Vec<GraphEdge> = Vec::with_capacity(max_len);
    walk_dfs(
        graph,
        head.subject,
        head.object,
        max_len,
        exclude,
        &mut path,
        &mut out,
    );
    out
}

fn walk_dfs(
    graph: &WalkGraph,
    current: crate::tkg::Entity,
    target: crate::tkg::Entity,
    depth_left: usize,
    exclude: &[usize],
    path: &mut Vec<GraphEdge>,
    out: &mut Vec<GroundedWalk>,
) {
    if depth_left == 0 {
        return;
    }
    for &edge in graph.edges_from(current) {
        if exclude.contains(&edge.quad_id) {
            continue;
        }
        path.push(edge);
        if edge.neighbor == target {
            out.push(GroundedWalk {
                edges: path.clone(),
            });
        }
        walk_dfs(
            graph,
            edge.neighbor,
            target,
            depth_left - 1,
            exclude,
            path,
            out,
        );
        path.pop();
    }
}

/// Substitute constants with variables: the rule depends only on the
/// relation sequence and the Allen tags computed from the walk's intervals.
pub fn lift_to_rule(head: &Quadruple, walk: &GroundedWalk) -> TemporalRule {
    let mut body = Vec::with_capacity(walk.edges.len());
    let mut prev = head.interval;
    for edge in &walk.edges {
        body.push((classify(prev, edge.interval), edge.relation));
        prev = edge.interval;
    }
    TemporalRule {
        head: head.relation,
        body,
    }
}

/// A mined rule with its grounding support and the three PCA confidences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRule {
    pub rule: TemporalRule,
    pub support: u64,
    pub pca_link: f64,
    pub pca_start: f64,
    pub pca_end: f64,
}

/// Deduplicated rules in a stable sort order, indexed by head relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    rules: Vec<ScoredRule>,
    by_head: Vec<Vec<usize>>,
}

impl RuleSet {
    fn build(mut rules: Vec<ScoredRule>, num_relations: usize) -> Self {
        rules.sort_by(|a, b| a.rule.cmp(&b.rule));
        rules.dedup_by(|a, b| a.rule == b.rule);
        let mut by_head = vec![Vec::new(); num_relations];
        for (i, r) in rules.iter().enumerate() {
            by_head[r.rule.head.idx()].push(i);
        }
        RuleSet { rules, by_head }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[ScoredRule] {
        &self.rules
    }

    pub fn get(&self, idx: usize) -> &ScoredRule {
        &self.rules[idx]
    }

    /// Indices of rules whose head is `r`.
    pub fn for_head(&self, r: Relation) -> &[usize] {
        self.by_head.get(r.idx()).map_or(&[], Vec::as_slice)
    }

    pub fn find(&self, rule: &TemporalRule) -> Option<usize> {
        self.rules.binary_search_by(|s| s.rule.cmp(rule)).ok()
    }

    /// Canonical line-oriented serialization:
    /// `head TAB a1 r1 a2 r2 ... TAB support TAB pca_ob TAB pca_tb TAB pca_te`.
    pub fn write_tsv<W: Write>(&self, dataset: &TkgDataset, mut w: W) -> Result<()> {
        for sr in &self.rules {
            let head = dataset.relation_name(sr.rule.head);
            check_name(head)?;
            let mut body = String::new();
            for (i, (a, r)) in sr.rule.body.iter().enumerate() {
                let rel = dataset.relation_name(*r);
                check_name(rel)?;
                if i > 0 {
                    body.push(' ');
                }
                body.push_str(a.name());
                body.push(' ');
                body.push_str(rel);
            }
            writeln!(
                w,
                "{head}\t{body}\t{}\t{}\t{}\t{}",
                sr.support, sr.pca_link, sr.pca_start, sr.pca_end
            )?;
        }
        Ok(())
    }

    pub fn to_tsv_string(&self, dataset: &TkgDataset) -> Result<String> {
        let mut buf = Vec::new();
        self.write_tsv(dataset, &mut buf)?;
        Ok(String::from_utf8(buf).expect("tsv is utf-8"))
    }

    /// Hex SHA-256 of the canonical serialization; stored in checkpoints.
    pub fn content_hash(&self, dataset: &TkgDataset) -> Result<String> {
        let tsv = self.to_tsv_string(dataset)?;
        let mut hasher = Sha256::new();
        hasher.update(tsv.as_bytes());
        Ok(format!("{:x}", hasher.finalize()))
    }

    pub fn read_tsv<R: BufRead>(dataset: &TkgDataset, r: R, file: &str) -> Result<RuleSet> {
        let mut rules = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| TkgcError::RuleParse {
                file: file.to_string(),
                line: lineno,
                msg,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 6 {
                return Err(err(format!("expected 6 columns, found {}", cols.len())));
            }
            let head = dataset.relation_id(cols[0])?;
            let tokens: Vec<&str> = cols[1].split_whitespace().collect();
            if tokens.is_empty() || !tokens.len().is_multiple_of(2) {
                return Err(err("body must alternate allen and relation tokens".into()));
            }
            let mut body = Vec::with_capacity(tokens.len() / 2);
            for pair in tokens.chunks(2) {
                let allen: AllenRelation = pair[0].parse().map_err(err)?;
                let rel = dataset.relation_id(pair[1])?;
                body.push((allen, rel));
            }
            let support: u64 = cols[2].parse().map_err(|_| err("bad support".into()))?;
            let parse_f = |s: &str, what: &str| -> Result<f64> {
                s.parse().map_err(|_| err(format!("bad {what}")))
            };
            rules.push(ScoredRule {
                rule: TemporalRule { head, body },
                support,
                pca_link: parse_f(cols[3], "pca_ob")?,
                pca_start: parse_f(cols[4], "pca_tb")?,
                pca_end: parse_f(cols[5], "pca_te")?,
            });
        }
        Ok(RuleSet::build(rules, dataset.num_relations()))
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.chars().any(char::is_whitespace) {
        return Err(TkgcError::UnserializableName(name.to_string()));
    }
    Ok(())
}

/// Mine, deduplicate, and PCA-score rules over every train quadruple as
/// head. Deterministic: parallel per-head mining is merged into a sorted
/// rule list before scoring.
pub fn mine_ruleset(
    dataset: &TkgDataset,
    graph: &WalkGraph,
    max_len: usize,
    min_support: u64,
) -> Result<RuleSet> {
    if !dataset.is_augmented() {
        return Err(TkgcError::NotAugmented);
    }
    let n = dataset.train.len();
    let counts: HashMap<TemporalRule, u64> = (0..n)
        .into_par_iter()
        .fold(HashMap::new, |mut acc, head_id| {
            let head = &dataset.train[head_id];
            let twin = dataset.twin_quad_id(n, head_id);
            for walk in mine_walks(graph, head, &[head_id, twin], max_len) {
                *acc.entry(lift_to_rule(head, &walk)).or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (rule, c) in b {
                *a.entry(rule).or_insert(0) += c;
            }
            a
        });

    let mut kept: Vec<(TemporalRule, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_support.max(1))
        .collect();
    kept.sort_by(|a, b| a.0.cmp(&b.0));

    let ctx = PcaContext::new(dataset, graph)?;
    let scored: Vec<ScoredRule> = kept
        .into_par_iter()
        .map(|(rule, support)| {
            let pca_link = pca_score_link(&rule, &ctx);
            let pca_start = pca_score_time(&rule, &ctx, TimeTarget::Start);
            let pca_end = pca_score_time(&rule, &ctx, TimeTarget::End);
            ScoredRule {
                rule,
                support,
                pca_link,
                pca_start,
                pca_end,
            }
        })
        .collect();

    Ok(RuleSet::build(scored, dataset.num_relations()))
}
