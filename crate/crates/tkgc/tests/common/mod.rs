//! Shared fixtures and independent brute-force oracles for the integration
//! suites. The oracles deliberately work straight off the quadruple list
//! (never the WalkGraph adjacency or the closed-form candidate ranges), so
//! they form an independent route to the same answers.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tkgc::allen::{classify, AllenRelation};
use tkgc::predict::PsiCache;
use tkgc::rules::{RuleSet, TemporalRule};
use tkgc::tkg::{
    build_time_vocab, build_walk_graph, Entity, TimeInterval, TimeVocab, TkgDataset, WalkGraph,
    Year,
};

pub struct Toy {
    pub dataset: TkgDataset,
    pub graph: WalkGraph,
    pub vocab: TimeVocab,
}

pub fn build_toy(train: &[(String, String, String, Year, Year)]) -> Toy {
    let named: Vec<(&str, &str, &str, Year, Year)> = train
        .iter()
        .map(|(s, r, o, a, b)| (s.as_str(), r.as_str(), o.as_str(), *a, *b))
        .collect();
    let mut dataset = TkgDataset::from_facts(&named, &[], &[]).unwrap();
    dataset.augment_inverses().unwrap();
    let graph = build_walk_graph(&dataset).unwrap();
    let vocab = build_time_vocab(&dataset).unwrap();
    Toy {
        dataset,
        graph,
        vocab,
    }
}

/// Random toy TKG: at most 6 entities, 3 relations, 5 distinct years.
pub fn random_toy(rng: &mut ChaCha8Rng) -> Toy {
    let n_ent = rng.gen_range(3..=6);
    let n_rel = rng.gen_range(1..=3);
    let year_pool: Vec<Year> = {
        let n_years = rng.gen_range(2..=5);
        let mut ys: BTreeSet<Year> = BTreeSet::new();
        while ys.len() < n_years {
            ys.insert(rng.gen_range(2000..2005));
        }
        ys.into_iter().collect()
    };
    let n_facts = rng.gen_range(4..=12);
    let mut facts = Vec::new();
    let mut seen = HashSet::new();
    for _ in 0..n_facts {
        let s = rng.gen_range(0..n_ent);
        let mut o = rng.gen_range(0..n_ent);
        if o == s {
            o = (o + 1) % n_ent;
        }
        let r = rng.gen_range(0..n_rel);
        let a = year_pool[rng.gen_range(0..year_pool.len())];
        let b = year_pool[rng.gen_range(0..year_pool.len())];
        let (a, b) = (a.min(b), a.max(b));
        if seen.insert((s, r, o, a, b)) {
            facts.push((format!("e{s}"), format!("rel{r}"), format!("e{o}"), a, b));
        }
    }
    // the vocabulary needs at least two distinct years
    facts.push((
        "e0".to_string(),
        "rel0".to_string(),
        "e1".to_string(),
        year_pool[0],
        *year_pool.last().unwrap(),
    ));
    build_toy(&facts)
}

// ---------------------------------------------------------------------------
// Brute-force grounding straight over the quadruple list
// ---------------------------------------------------------------------------

fn grounds_link(
    ds: &TkgDataset,
    at: Entity,
    target: Entity,
    prev: TimeInterval,
    body: &[(AllenRelation, tkgc::tkg::Relation)],
) -> bool {
    let (a, r) = body[0];
    ds.train.iter().any(|q| {
        q.subject == at
            && q.relation == r
            && classify(prev, q.interval) == a
            && if body.len() == 1 {
                q.object == target
            } else {
                grounds_link(ds, q.object, target, q.interval, &body[1..])
            }
    })
}

fn count_link_paths(
    ds: &TkgDataset,
    at: Entity,
    target: Entity,
    prev: TimeInterval,
    body: &[(AllenRelation, tkgc::tkg::Relation)],
) -> u64 {
    let (a, r) = body[0];
    ds.train
        .iter()
        .filter(|q| q.subject == at && q.relation == r && classify(prev, q.interval) == a)
        .map(|q| {
            if body.len() == 1 {
                u64::from(q.object == target)
            } else {
                count_link_paths(ds, q.object, target, q.interval, &body[1..])
            }
        })
        .sum()
}

fn rest_reaches(
    ds: &TkgDataset,
    at: Entity,
    target: Entity,
    prev: TimeInterval,
    rest: &[(AllenRelation, tkgc::tkg::Relation)],
) -> bool {
    if rest.is_empty() {
        return at == target;
    }
    let (a, r) = rest[0];
    ds.train.iter().any(|q| {
        q.subject == at
            && q.relation == r
            && classify(prev, q.interval) == a
            && rest_reaches(ds, q.object, target, q.interval, &rest[1..])
    })
}

/// Is `t` a brute-force candidate start (or end) year for `a1` against `t2`?
fn brute_candidate(
    a1: AllenRelation,
    t2: TimeInterval,
    vocab: &TimeVocab,
    t: Year,
    start: bool,
) -> bool {
    if start {
        vocab
            .years()
            .iter()
            .any(|&e| e >= t && classify(TimeInterval { start: t, end: e }, t2) == a1)
    } else {
        vocab
            .years()
            .iter()
            .any(|&b| b <= t && classify(TimeInterval { start: b, end: t }, t2) == a1)
    }
}

// ---------------------------------------------------------------------------
// PCA oracles (exhaustive enumeration)
// ---------------------------------------------------------------------------

pub fn oracle_pca_link(toy: &Toy, rule: &TemporalRule) -> f64 {
    let ds = &toy.dataset;
    let positives: HashSet<(Entity, Entity, TimeInterval)> = ds
        .train
        .iter()
        .filter(|q| q.relation == rule.head)
        .map(|q| (q.subject, q.object, q.interval))
        .collect();
    let heads: BTreeSet<(Entity, TimeInterval)> =
        positives.iter().map(|&(s, _, t)| (s, t)).collect();
    let mut num = 0u64;
    let mut den = 0u64;
    for &(s, t) in &heads {
        for o in (0..ds.num_entities()).map(|i| Entity(i as u32)) {
            if grounds_link(ds, s, o, t, &rule.body) {
                den += 1;
                if positives.contains(&(s, o, t)) {
                    num += 1;
                }
            }
        }
    }
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn oracle_pca_time(toy: &Toy, rule: &TemporalRule, start: bool) -> f64 {
    let ds = &toy.dataset;
    let mut positives: BTreeMap<(Entity, Entity), BTreeSet<Year>> = BTreeMap::new();
    for q in ds.train.iter().filter(|q| q.relation == rule.head) {
        let instant = if start {
            q.interval.start
        } else {
            q.interval.end
        };
        positives
            .entry((q.subject, q.object))
            .or_default()
            .insert(instant);
    }
    let mut num = 0u64;
    let mut den = 0u64;
    for ((s, o), instants) in &positives {
        for &t in toy.vocab.years() {
            // some partial grounding whose first-hop interval projects t
            let candidate = ds.train.iter().any(|q| {
                q.subject == *s
                    && q.relation == rule.body[0].1
                    && rest_reaches(ds, q.object, *o, q.interval, &rule.body[1..])
                    && brute_candidate(rule.body[0].0, q.interval, &toy.vocab, t, start)
            });
            if candidate {
                den += 1;
                if instants.contains(&t) {
                    num += 1;
                }
            }
        }
    }
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Direct summation of the candidate-score formula: for every rule with the
/// query's head and every candidate entity, psi times the brute-force path
/// count.
pub fn oracle_score_link(
    toy: &Toy,
    rules: &RuleSet,
    psi: &PsiCache,
    subject: Entity,
    relation: tkgc::tkg::Relation,
    interval: TimeInterval,
) -> Vec<f64> {
    let ds = &toy.dataset;
    let mut scores = vec![0.0; ds.num_entities()];
    for (ri, sr) in rules.rules().iter().enumerate() {
        if sr.rule.head != relation {
            continue;
        }
        for o in (0..ds.num_entities()).map(|i| Entity(i as u32)) {
            let paths = count_link_paths(ds, subject, o, interval, &sr.rule.body);
            if paths > 0 {
                scores[o.idx()] += psi.object[ri] * paths as f64;
            }
        }
    }
    scores
}

/// First-hop intervals of every partial grounding from `s` to `o` matching
/// `body` (first tag unchecked), enumerated straight off the quadruple list
/// with multiplicity.
fn partial_groundings(
    ds: &TkgDataset,
    s: Entity,
    o: Entity,
    body: &[(AllenRelation, tkgc::tkg::Relation)],
) -> Vec<TimeInterval> {
    fn count_rest(
        ds: &TkgDataset,
        at: Entity,
        target: Entity,
        prev: TimeInterval,
        rest: &[(AllenRelation, tkgc::tkg::Relation)],
    ) -> u64 {
        if rest.is_empty() {
            return u64::from(at == target);
        }
        let (a, r) = rest[0];
        ds.train
            .iter()
            .filter(|q| q.subject == at && q.relation == r && classify(prev, q.interval) == a)
            .map(|q| count_rest(ds, q.object, target, q.interval, &rest[1..]))
            .sum()
    }
    let mut out = Vec::new();
    for q in ds
        .train
        .iter()
        .filter(|q| q.subject == s && q.relation == body[0].1)
    {
        for _ in 0..count_rest(ds, q.object, o, q.interval, &body[1..]) {
            out.push(q.interval);
        }
    }
    out
}

/// Direct summation of the time score tables: per rule and per partial
/// grounding, the Gaussian path weights over brute-force candidate years
/// (normalized with plain densities, not in log space), times psi.
pub fn oracle_score_time(
    toy: &Toy,
    rules: &RuleSet,
    psi: &PsiCache,
    pair: &tkgc::stats::PairStats,
    q_subject: Entity,
    q_relation: tkgc::tkg::Relation,
    q_object: Entity,
) -> (Vec<f64>, Vec<f64>) {
    let n = toy.vocab.len();
    let mut start = vec![0.0; n];
    let mut end = vec![0.0; n];
    for (ri, sr) in rules.rules().iter().enumerate() {
        if sr.rule.head != q_relation {
            continue;
        }
        let (a1, r1) = sr.rule.body[0];
        for t2 in partial_groundings(&toy.dataset, q_subject, q_object, &sr.rule.body) {
            for (table, psi_val, is_start, anchor, g) in [
                (
                    &mut start,
                    psi.start[ri],
                    true,
                    t2.start,
                    pair.start_gap(q_relation, r1),
                ),
                (
                    &mut end,
                    psi.end[ri],
                    false,
                    t2.end,
                    pair.end_gap(q_relation, r1),
                ),
            ] {
                let candidates: Vec<Year> = toy
                    .vocab
                    .years()
                    .iter()
                    .copied()
                    .filter(|&t| brute_candidate(a1, t2, &toy.vocab, t, is_start))
                    .collect();
                if candidates.is_empty() {
                    continue;
                }
                let dens: Vec<f64> = candidates
                    .iter()
                    .map(|&t| {
                        tkgc::stats::gaussian_density(
                            f64::from(t) - f64::from(anchor),
                            g.mean,
                            g.sd,
                        )
                    })
                    .collect();
                let z: f64 = dens.iter().sum();
                for (&t, d) in candidates.iter().zip(dens) {
                    table[toy.vocab.id_of(t).unwrap()] += psi_val * d / z;
                }
            }
        }
    }
    (start, end)
}

/// Planted symmetric dataset: r_h(x, y, T) holds iff r_1(y, x, T) holds.
/// All r_1 facts go to train; r_h facts are split train/valid/test.
pub struct Planted {
    pub dataset: TkgDataset,
    pub graph: WalkGraph,
    pub vocab: TimeVocab,
}

pub fn planted_symmetric(rng: &mut ChaCha8Rng, n_entities: usize, n_pairs: usize) -> Planted {
    assert!(n_entities.is_multiple_of(2) && n_pairs >= n_entities / 2);
    let mut pairs: Vec<(usize, usize, Year, Year)> = Vec::new();
    let mut used = HashSet::new();
    let interval = |rng: &mut ChaCha8Rng| {
        let a = rng.gen_range(1900..2000);
        (a, a + rng.gen_range(0..=10))
    };
    // seed pairs covering every entity, then random extras
    for i in 0..n_entities / 2 {
        let (a, b) = interval(rng);
        used.insert((2 * i, 2 * i + 1));
        pairs.push((2 * i, 2 * i + 1, a, b));
    }
    while pairs.len() < n_pairs {
        let x = rng.gen_range(0..n_entities);
        let y = rng.gen_range(0..n_entities);
        if x == y || !used.insert((x, y)) {
            continue;
        }
        let (a, b) = interval(rng);
        pairs.push((x, y, a, b));
    }
    let mut train: Vec<(String, String, String, Year, Year)> = pairs
        .iter()
        .map(|&(x, y, a, b)| (format!("e{y}"), "r1".to_string(), format!("e{x}"), a, b))
        .collect();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    for (i, &(x, y, a, b)) in pairs.iter().enumerate() {
        let fact = (format!("e{x}"), "rh".to_string(), format!("e{y}"), a, b);
        match i % 20 {
            0..=14 => train.push(fact),
            15..=16 => valid.push(fact),
            _ => test.push(fact),
        }
    }
    fn named(v: &[(String, String, String, Year, Year)]) -> Vec<(&str, &str, &str, Year, Year)> {
        v.iter()
            .map(|(s, r, o, a, b)| (s.as_str(), r.as_str(), o.as_str(), *a, *b))
            .collect()
    }
    let mut dataset =
        TkgDataset::from_facts(&named(&train), &named(&valid), &named(&test)).unwrap();
    dataset.augment_inverses().unwrap();
    let graph = build_walk_graph(&dataset).unwrap();
    let vocab = build_time_vocab(&dataset).unwrap();
    Planted {
        dataset,
        graph,
        vocab,
    }
}
