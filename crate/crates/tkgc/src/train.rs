//! Training: the link and time losses with exact gradients, Adam, the
//! cosine-annealed learning rate with a floor, and the per-quadruple
//! training loop with best-validation checkpointing.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TkgcError};
use crate::eval::{eval_link, eval_time};
use crate::predict::{
    apply_gadgets_link, apply_gadgets_time, compute_psi_cache, score_link_traced,
    score_time_traced, softmax_backward, softmax_probs, LinkQuery, QueryContext, TimeQuery,
};
use crate::rules::RuleSet;
use crate::scorer::{backward_rule_score, init_params, GruForm, ModelParams, ScoreTarget};
use crate::stats::Statistics;
use crate::tkg::{Entity, Relation, Split, TimeInterval, TimeVocab, TkgDataset, WalkGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Link,
    Time,
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "link" => Ok(Task::Link),
            "time" => Ok(Task::Time),
            other => Err(format!(
                "unknown task `{other}` (expected `link` or `time`)"
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub task: Task,
    pub epochs: usize,
    /// Initial (maximum) learning rate.
    pub lr: f64,
    /// The schedule never drops below `lr * lr_floor_frac`.
    pub lr_floor_frac: f64,
    /// Gadget ensembling coefficient (0 disables the gadgets).
    pub eta: f64,
    pub max_rule_len: usize,
    pub dim: usize,
    pub seed: u64,
    pub gru_form: GruForm,
    /// Run a validation pass every this many epochs.
    pub val_every: usize,
    /// Add gadget terms to the training-time scores as well (they are
    /// constants with respect to the parameters).
    pub gadgets_in_train: bool,
}

impl TrainConfig {
    pub fn defaults(task: Task) -> Self {
        TrainConfig {
            task,
            epochs: match task {
                Task::Link => 5000,
                Task::Time => 2000,
            },
            lr: 1e-3,
            lr_floor_frac: 0.2,
            eta: 0.0,
            max_rule_len: 3,
            dim: 32,
            seed: 0,
            gru_form: GruForm::Coupled,
            val_every: 25,
            gadgets_in_train: false,
        }
    }
}

/// One cosine-annealing cycle from `base` down to `base * floor_frac`
/// spanning `total` steps; clamped to the floor, never above `base`.
pub fn cosine_lr(step: usize, total: usize, base: f64, floor_frac: f64) -> f64 {
    let floor = base * floor_frac;
    if total <= 1 {
        return base;
    }
    let t = step.min(total - 1) as f64 / (total - 1) as f64;
    floor + 0.5 * (base - floor) * (1.0 + (std::f64::consts::PI * t).cos())
}

/// Link-prediction loss and its gradient with respect to the probability
/// table: total false-object probability, plus for every true object the
/// mean excess probability of the false objects strictly above it.
pub fn loss_link(probs: &[f64], gold: &[Entity]) -> (f64, Vec<f64>) {
    let mut is_gold = vec![false; probs.len()];
    for g in gold {
        is_gold[g.idx()] = true;
    }
    let mut loss = 0.0;
    let mut dp = vec![0.0; probs.len()];
    for (i, &p) in probs.iter().enumerate() {
        if !is_gold[i] {
            loss += p;
            dp[i] += 1.0;
        }
    }
    for o in 0..probs.len() {
        if !is_gold[o] {
            continue;
        }
        let po = probs[o];
        let higher: Vec<usize> = (0..probs.len())
            .filter(|&i| !is_gold[i] && probs[i] > po)
            .collect();
        if higher.is_empty() {
            continue;
        }
        let k = higher.len() as f64;
        for &i in &higher {
            loss += (probs[i] - po) / k;
            dp[i] += 1.0 / k;
        }
        dp[o] -= 1.0;
    }
    (loss, dp)
}

fn loss_time_one(probs: &[f64], gold_ids: &[usize], vocab: &TimeVocab) -> (f64, Vec<f64>) {
    let mut is_gold = vec![false; probs.len()];
    for &g in gold_ids {
        is_gold[g] = true;
    }
    let max_diff = vocab.max_id_diff() as f64;
    let mut loss = 0.0;
    let mut dp = vec![0.0; probs.len()];
    for &t in gold_ids {
        let mut acc = 0.0;
        for (f, &pf) in probs.iter().enumerate() {
            if is_gold[f] {
                continue;
            }
            let d = t.abs_diff(f) as f64 / max_diff;
            loss += (pf - probs[t]) * d;
            dp[f] += d;
            acc += d;
        }
        dp[t] -= acc;
    }
    (loss, dp)
}

/// Time-prediction loss: distance-weighted excess probability of false
/// instants over true ones, summed over the start and end tables.
pub fn loss_time(
    p_start: &[f64],
    p_end: &[f64],
    gold_start_ids: &[usize],
    gold_end_ids: &[usize],
    vocab: &TimeVocab,
) -> (f64, Vec<f64>, Vec<f64>) {
    let (lb, db) = loss_time_one(p_start, gold_start_ids, vocab);
    let (le, de) = loss_time_one(p_end, gold_end_ids, vocab);
    (lb + le, db, de)
}

/// Adam with bias correction, applied over the whole parameter bundle.
pub struct Adam {
    m: ModelParams,
    v: ModelParams,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(like: &ModelParams) -> Self {
        Adam {
            m: like.zeros_like(),
            v: like.zeros_like(),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let gs = grads.param_slices();
        let ms = self.m.param_slices_mut();
        let vs = self.v.param_slices_mut();
        let ps = params.param_slices_mut();
        for (((p, g), m), v) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
            for k in 0..p.len() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
                let mhat = m[k] / bc1;
                let vhat = v[k] / bc2;
                p[k] -= lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}

/// True objects per exact (subject, relation, interval) key, train split.
type LinkGold = HashMap<(Entity, Relation, TimeInterval), Vec<Entity>>;
/// True start/end vocab ids per (subject, relation, object), train split.
type TimeGold = HashMap<(Entity, Relation, Entity), (Vec<usize>, Vec<usize>)>;

fn build_link_gold(dataset: &TkgDataset) -> LinkGold {
    let mut sets: HashMap<(Entity, Relation, TimeInterval), BTreeSet<Entity>> = HashMap::new();
    for q in &dataset.train {
        sets.entry((q.subject, q.relation, q.interval))
            .or_default()
            .insert(q.object);
    }
    sets.into_iter()
        .map(|(k, v)| (k, v.into_iter().collect()))
        .collect()
}

fn build_time_gold(dataset: &TkgDataset, vocab: &TimeVocab) -> TimeGold {
    type IdSets = (BTreeSet<usize>, BTreeSet<usize>);
    let mut sets: HashMap<(Entity, Relation, Entity), IdSets> = HashMap::new();
    for q in &dataset.train {
        let e = sets.entry((q.subject, q.relation, q.object)).or_default();
        e.0.insert(vocab.id_of(q.interval.start).expect("train year in vocab"));
        e.1.insert(vocab.id_of(q.interval.end).expect("train year in vocab"));
    }
    sets.into_iter()
        .map(|(k, (b, e))| (k, (b.into_iter().collect(), e.into_iter().collect())))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Best validation metric (MRR for link, aeIOU for time), when a
    /// non-empty validation split existed.
    pub best_val: Option<f64>,
    /// Mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Train from scratch: per-quadruple forward, loss, exact backward, Adam
/// step; cosine-annealed learning rate; checkpoint on best validation
/// metric. Deterministic for a fixed config, seed, and dataset.
pub fn train(
    cfg: &TrainConfig,
    dataset: &TkgDataset,
    graph: &WalkGraph,
    vocab: &TimeVocab,
    rules: &RuleSet,
    stats: &Statistics,
) -> Result<TrainOutcome> {
    let ctx = QueryContext::new(dataset, graph, vocab, rules, stats);
    let mut params = init_params(dataset.num_relations(), cfg.dim, cfg.seed)?;
    let mut adam = Adam::new(&params);
    let mut grads = params.zeros_like();
    let link_gold = build_link_gold(dataset);
    let time_gold = build_time_gold(dataset, vocab);
    let n = dataset.train.len();
    let has_valid = !dataset.valid.is_empty();

    let mut best_val: Option<f64> = None;
    let mut best_params: Option<ModelParams> = None;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = cosine_lr(epoch, cfg.epochs, cfg.lr, cfg.lr_floor_frac);
        let mut total_loss = 0.0;
        for i in 0..n {
            let quad = dataset.train[i];
            let exclude = [i, dataset.twin_quad_id(n, i)];
            let loss = match cfg.task {
                Task::Link => link_step(
                    cfg,
                    &ctx,
                    &mut params,
                    &mut adam,
                    &mut grads,
                    &link_gold,
                    &quad,
                    &exclude,
                    lr,
                )?,
                Task::Time => time_step(
                    cfg,
                    &ctx,
                    &mut params,
                    &mut adam,
                    &mut grads,
                    &time_gold,
                    &quad,
                    &exclude,
                    lr,
                )?,
            };
            if !loss.is_finite() {
                return Err(TkgcError::NonFiniteLoss { epoch, step: i });
            }
            total_loss += loss;
        }
        epoch_losses.push(if n > 0 { total_loss / n as f64 } else { 0.0 });

        let last = epoch + 1 == cfg.epochs;
        if has_valid && cfg.val_every > 0 && ((epoch + 1) % cfg.val_every == 0 || last) {
            let psi = compute_psi_cache(&params, cfg.gru_form, rules)?;
            let metric = match cfg.task {
                Task::Link => eval_link(&ctx, &psi, Split::Valid).mrr,
                Task::Time => eval_time(&ctx, &psi, Split::Valid).aeiou,
            };
            if best_val.is_none_or(|b| metric > b) {
                best_val = Some(metric);
                best_params = Some(params.clone());
            }
            log::info!("epoch {epoch}: lr {lr:.3e}, val metric {metric:.4}");
        }
    }

    Ok(TrainOutcome {
        params: best_params.unwrap_or(params),
        best_val,
        epoch_losses,
    })
}

#[allow(clippy::too_many_arguments)]
fn link_step(
    cfg: &TrainConfig,
    ctx: &QueryContext,
    params: &mut ModelParams,
    adam: &mut Adam,
    grads: &mut ModelParams,
    gold: &LinkGold,
    quad: &crate::tkg::Quadruple,
    exclude: &[usize],
    lr: f64,
) -> Result<f64> {
    let q = LinkQuery {
        subject: quad.subject,
        relation: quad.relation,
        interval: quad.interval,
    };
    let (mut table, fired) = score_link_traced(ctx, params, cfg.gru_form, &q, exclude)?;
    if cfg.gadgets_in_train {
        apply_gadgets_link(ctx, &mut table, &q, exclude);
    }
    let probs = softmax_probs(&table.scores);
    let golds = &gold[&(quad.subject, quad.relation, quad.interval)];
    let (loss, dprobs) = loss_link(&probs, golds);
    if !loss.is_finite() {
        return Ok(loss);
    }
    let dscores = softmax_backward(&probs, &dprobs);
    grads.zero();
    for firing in &fired {
        let rule = &ctx.rules.get(firing.rule_idx).rule;
        let dpsi: f64 = firing
            .counts
            .iter()
            .map(|(o, &c)| dscores[o.idx()] * c as f64)
            .sum();
        backward_rule_score(
            params,
            cfg.gru_form,
            rule,
            ScoreTarget::Object,
            &firing.scored,
            dpsi,
            grads,
        );
    }
    adam.step(params, grads, lr);
    Ok(loss)
}

#[allow(clippy::too_many_arguments)]
fn time_step(
    cfg: &TrainConfig,
    ctx: &QueryContext,
    params: &mut ModelParams,
    adam: &mut Adam,
    grads: &mut ModelParams,
    gold: &TimeGold,
    quad: &crate::tkg::Quadruple,
    exclude: &[usize],
    lr: f64,
) -> Result<f64> {
    let q = TimeQuery {
        subject: quad.subject,
        relation: quad.relation,
        object: quad.object,
    };
    let (mut ts, mut te, fired) = score_time_traced(ctx, params, cfg.gru_form, &q, exclude)?;
    if cfg.gadgets_in_train {
        apply_gadgets_time(ctx, &mut ts, &mut te, &q, exclude);
    }
    let pb = softmax_probs(&ts.scores);
    let pe = softmax_probs(&te.scores);
    let (gold_b, gold_e) = &gold[&(quad.subject, quad.relation, quad.object)];
    let (loss, dpb, dpe) = loss_time(&pb, &pe, gold_b, gold_e, ctx.vocab);
    if !loss.is_finite() {
        return Ok(loss);
    }
    let dsb = softmax_backward(&pb, &dpb);
    let dse = softmax_backward(&pe, &dpe);
    grads.zero();
    for firing in &fired {
        let rule = &ctx.rules.get(firing.rule_idx).rule;
        let dpsi_b: f64 = firing
            .start_mass
            .iter()
            .map(|(&yid, &mass)| dsb[yid] * mass)
            .sum();
        let dpsi_e: f64 = firing
            .end_mass
            .iter()
            .map(|(&yid, &mass)| dse[yid] * mass)
            .sum();
        if let Some(scored) = &firing.scored_start {
            backward_rule_score(
                params,
                cfg.gru_form,
                rule,
                ScoreTarget::Start,
                scored,
                dpsi_b,
                grads,
            );
        }
        if let Some(scored) = &firing.scored_end {
            backward_rule_score(
                params,
                cfg.gru_form,
                rule,
                ScoreTarget::End,
                scored,
                dpsi_e,
                grads,
            );
        }
    }
    adam.step(params, grads, lr);
    Ok(loss)
}
