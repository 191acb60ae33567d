//! Neural rule scoring: GRU path embeddings over rule bodies, normalized
//! cosine similarity against three per-relation head vectors, combination
//! with the symbolic PCA prior, and exact reverse-mode gradients for every
//! parameter.
//!
//! The default GRU update couples the reset gate directly to `h_{t-1}` in
//! the candidate state:
//!
//! ```text
//! r_t = sigmoid(W_r x_t + U_r h_{t-1} + b_r)
//! z_t = sigmoid(W_z x_t + U_z h_{t-1} + b_z)
//! n_t = tanh(W_n x_t + r_t ⊙ h_{t-1} + b_n)
//! h_t = (1 - z_t) ⊙ n_t + z_t ⊙ h_{t-1}
//! ```
//!
//! [`GruForm::Standard`] uses the conventional recurrent weight instead,
//! `n_t = tanh(W_n x_t + r_t ⊙ (U_n h_{t-1}) + b_n)`. `U_n` is always
//! allocated so checkpoints have a stable shape; in the coupled form its
//! gradient is identically zero.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TkgcError};
use crate::rules::TemporalRule;
use crate::tkg::Relation;

pub const NUM_ALLEN: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum GruForm {
    /// Candidate state couples the reset gate to `h_{t-1}` directly.
    #[default]
    Coupled,
    /// Conventional GRU with the `U_n` recurrent weight.
    Standard,
}

/// Which head vector of the rule's head relation to score against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreTarget {
    Object,
    Start,
    End,
}

/// All learnable parameters. Also used as the gradient container: a
/// gradient bundle is a zeroed `ModelParams` accumulated into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub dim: usize,
    /// 13 x d Allen-relation embeddings.
    pub allen_emb: Array2<f64>,
    /// R x d KG-relation embeddings.
    pub rel_emb: Array2<f64>,
    /// R x d head vectors for link prediction.
    pub head_link: Array2<f64>,
    /// R x d head vectors for start-time prediction.
    pub head_start: Array2<f64>,
    /// R x d head vectors for end-time prediction.
    pub head_end: Array2<f64>,
    pub w_r: Array2<f64>,
    pub u_r: Array2<f64>,
    pub b_r: Array1<f64>,
    pub w_z: Array2<f64>,
    pub u_z: Array2<f64>,
    pub b_z: Array1<f64>,
    pub w_n: Array2<f64>,
    pub u_n: Array2<f64>,
    pub b_n: Array1<f64>,
}

/// Uniform init in [-1/sqrt(dim), +1/sqrt(dim)], biases zero, deterministic
/// for a given seed.
pub fn init_params(num_relations: usize, dim: usize, seed: u64) -> Result<ModelParams> {
    if dim == 0 {
        return Err(TkgcError::ZeroDim);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 1.0 / (dim as f64).sqrt();
    let mut mat = |rows: usize, cols: usize| {
        Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..=bound))
    };
    Ok(ModelParams {
        dim,
        allen_emb: mat(NUM_ALLEN, dim),
        rel_emb: mat(num_relations, dim),
        head_link: mat(num_relations, dim),
        head_start: mat(num_relations, dim),
        head_end: mat(num_relations, dim),
        w_r: mat(dim, 2 * dim),
        u_r: mat(dim, dim),
        b_r: Array1::zeros(dim),
        w_z: mat(dim, 2 * dim),
        u_z: mat(dim, dim),
        b_z: Array1::zeros(dim),
        w_n: mat(dim, 2 * dim),
        u_n: mat(dim, dim),
        b_n: Array1::zeros(dim),
    })
}

impl ModelParams {
    pub fn num_relations(&self) -> usize {
        self.rel_emb.nrows()
    }

    pub fn zeros_like(&self) -> ModelParams {
        ModelParams {
            dim: self.dim,
            allen_emb: Array2::zeros(self.allen_emb.raw_dim()),
            rel_emb: Array2::zeros(self.rel_emb.raw_dim()),
            head_link: Array2::zeros(self.head_link.raw_dim()),
            head_start: Array2::zeros(self.head_start.raw_dim()),
            head_end: Array2::zeros(self.head_end.raw_dim()),
            w_r: Array2::zeros(self.w_r.raw_dim()),
            u_r: Array2::zeros(self.u_r.raw_dim()),
            b_r: Array1::zeros(self.b_r.raw_dim()),
            w_z: Array2::zeros(self.w_z.raw_dim()),
            u_z: Array2::zeros(self.u_z.raw_dim()),
            b_z: Array1::zeros(self.b_z.raw_dim()),
            w_n: Array2::zeros(self.w_n.raw_dim()),
            u_n: Array2::zeros(self.u_n.raw_dim()),
            b_n: Array1::zeros(self.b_n.raw_dim()),
        }
    }

    pub fn zero(&mut self) {
        for s in self.param_slices_mut() {
            s.fill(0.0);
        }
    }

    /// All parameter storage in a fixed field order.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        vec![
            self.allen_emb.as_slice().unwrap(),
            self.rel_emb.as_slice().unwrap(),
            self.head_link.as_slice().unwrap(),
            self.head_start.as_slice().unwrap(),
            self.head_end.as_slice().unwrap(),
            self.w_r.as_slice().unwrap(),
            self.u_r.as_slice().unwrap(),
            self.b_r.as_slice().unwrap(),
            self.w_z.as_slice().unwrap(),
            self.u_z.as_slice().unwrap(),
            self.b_z.as_slice().unwrap(),
            self.w_n.as_slice().unwrap(),
            self.u_n.as_slice().unwrap(),
            self.b_n.as_slice().unwrap(),
        ]
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.allen_emb.as_slice_mut().unwrap(),
            self.rel_emb.as_slice_mut().unwrap(),
            self.head_link.as_slice_mut().unwrap(),
            self.head_start.as_slice_mut().unwrap(),
            self.head_end.as_slice_mut().unwrap(),
            self.w_r.as_slice_mut().unwrap(),
            self.u_r.as_slice_mut().unwrap(),
            self.b_r.as_slice_mut().unwrap(),
            self.w_z.as_slice_mut().unwrap(),
            self.u_z.as_slice_mut().unwrap(),
            self.b_z.as_slice_mut().unwrap(),
            self.w_n.as_slice_mut().unwrap(),
            self.u_n.as_slice_mut().unwrap(),
            self.b_n.as_slice_mut().unwrap(),
        ]
    }

    pub fn num_params(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    pub fn get_flat(&self, mut i: usize) -> f64 {
        for s in self.param_slices() {
            if i < s.len() {
                return s[i];
            }
            i -= s.len();
        }
        panic!("flat index out of range");
    }

    pub fn set_flat(&mut self, mut i: usize, v: f64) {
        for s in self.param_slices_mut() {
            if i < s.len() {
                s[i] = v;
                return;
            }
            i -= s.len();
        }
        panic!("flat index out of range");
    }

    pub fn head_table(&self, target: ScoreTarget) -> &Array2<f64> {
        match target {
            ScoreTarget::Object => &self.head_link,
            ScoreTarget::Start => &self.head_start,
            ScoreTarget::End => &self.head_end,
        }
    }

    fn head_table_mut(&mut self, target: ScoreTarget) -> &mut Array2<f64> {
        match target {
            ScoreTarget::Object => &mut self.head_link,
            ScoreTarget::Start => &mut self.head_start,
            ScoreTarget::End => &mut self.head_end,
        }
    }

    fn check_relation(&self, r: Relation) -> Result<()> {
        if r.idx() >= self.num_relations() {
            return Err(TkgcError::UnknownRelation(format!("relation id {}", r.0)));
        }
        Ok(())
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct GruStep {
    x: Array1<f64>,
    h_prev: Array1<f64>,
    r: Array1<f64>,
    z: Array1<f64>,
    n: Array1<f64>,
    /// `U_n h_{t-1}`, recorded only for the standard form.
    u_n_h: Option<Array1<f64>>,
}

/// Forward record of one rule body, sufficient for exact backprop.
pub struct PathTrace {
    steps: Vec<GruStep>,
    /// Final hidden state: the path embedding.
    pub h: Array1<f64>,
}

/// Run the GRU over the rule body (`h_0 = 0`) and return the final hidden
/// state together with the step records.
pub fn path_embedding_traced(
    params: &ModelParams,
    form: GruForm,
    rule: &TemporalRule,
) -> Result<PathTrace> {
    let d = params.dim;
    let mut h = Array1::zeros(d);
    let mut steps = Vec::with_capacity(rule.body.len());
    for &(allen, rel) in &rule.body {
        params.check_relation(rel)?;
        let mut x = Array1::zeros(2 * d);
        x.slice_mut(ndarray::s![..d])
            .assign(&params.allen_emb.row(allen.idx()));
        x.slice_mut(ndarray::s![d..])
            .assign(&params.rel_emb.row(rel.idx()));

        let r = (params.w_r.dot(&x) + params.u_r.dot(&h) + &params.b_r).mapv(sigmoid);
        let z = (params.w_z.dot(&x) + params.u_z.dot(&h) + &params.b_z).mapv(sigmoid);
        let (u_n_h, recur) = match form {
            GruForm::Coupled => (None, h.clone()),
            GruForm::Standard => {
                let v = params.u_n.dot(&h);
                (Some(v.clone()), v)
            }
        };
        let n = (params.w_n.dot(&x) + &r * &recur + &params.b_n).mapv(f64::tanh);
        let h_next = (1.0 - &z) * &n + &z * &h;
        steps.push(GruStep {
            x,
            h_prev: h,
            r,
            z,
            n,
            u_n_h,
        });
        h = h_next;
    }
    Ok(PathTrace { steps, h })
}

/// Path embedding without the trace.
pub fn path_embedding(
    params: &ModelParams,
    form: GruForm,
    rule: &TemporalRule,
) -> Result<Array1<f64>> {
    Ok(path_embedding_traced(params, form, rule)?.h)
}

fn outer_add(target: &mut Array2<f64>, col: &Array1<f64>, row: &Array1<f64>) {
    for (i, &c) in col.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut t = target.row_mut(i);
        t.scaled_add(c, row);
    }
}

/// Backprop `d_loss/d_h_final` through the recorded GRU steps, accumulating
/// into `grads` (a `ModelParams`-shaped bundle).
pub fn backward_path(
    params: &ModelParams,
    form: GruForm,
    rule: &TemporalRule,
    trace: &PathTrace,
    dh_final: &Array1<f64>,
    grads: &mut ModelParams,
) {
    let d = params.dim;
    let mut g = dh_final.clone();
    for (step, &(allen, rel)) in trace.steps.iter().zip(&rule.body).rev() {
        let GruStep {
            x,
            h_prev,
            r,
            z,
            n,
            u_n_h,
        } = step;
        // h = (1 - z) ⊙ n + z ⊙ h_prev
        let da_z = (&g * &(h_prev - n)) * z * &(1.0 - z);
        let da_n = (&g * &(1.0 - z)) * &(1.0 - &(n * n));
        let mut dh_prev = &g * z;

        // candidate-state recurrence
        let da_r_pre = match form {
            GruForm::Coupled => {
                dh_prev = dh_prev + &da_n * r;
                &da_n * h_prev
            }
            GruForm::Standard => {
                let v = u_n_h.as_ref().expect("standard trace records U_n h");
                let dv = &da_n * r;
                outer_add(&mut grads.u_n, &dv, h_prev);
                dh_prev = dh_prev + grads_t_dot(&params.u_n, &dv);
                &da_n * v
            }
        };
        let da_r = da_r_pre * r * &(1.0 - r);

        outer_add(&mut grads.w_r, &da_r, x);
        outer_add(&mut grads.u_r, &da_r, h_prev);
        grads.b_r += &da_r;
        outer_add(&mut grads.w_z, &da_z, x);
        outer_add(&mut grads.u_z, &da_z, h_prev);
        grads.b_z += &da_z;
        outer_add(&mut grads.w_n, &da_n, x);
        grads.b_n += &da_n;

        let dx = grads_t_dot(&params.w_r, &da_r)
            + grads_t_dot(&params.w_z, &da_z)
            + grads_t_dot(&params.w_n, &da_n);
        grads
            .allen_emb
            .row_mut(allen.idx())
            .scaled_add(1.0, &dx.slice(ndarray::s![..d]));
        grads
            .rel_emb
            .row_mut(rel.idx())
            .scaled_add(1.0, &dx.slice(ndarray::s![d..]));

        dh_prev = dh_prev + grads_t_dot(&params.u_r, &da_r) + grads_t_dot(&params.u_z, &da_z);
        g = dh_prev;
    }
}

// m^T · v
fn grads_t_dot(m: &Array2<f64>, v: &Array1<f64>) -> Array1<f64> {
    m.t().dot(v)
}

/// Cosine similarity mapped affinely onto [0, 1]; 0.5 (neutral) when either
/// vector is zero.
pub fn similarity(p: &Array1<f64>, q: &Array1<f64>) -> Result<f64> {
    if p.len() != q.len() {
        return Err(TkgcError::DimMismatch(p.len(), q.len()));
    }
    let np = p.dot(p).sqrt();
    let nq = q.dot(q).sqrt();
    if np == 0.0 || nq == 0.0 {
        return Ok(0.5);
    }
    Ok((p.dot(q) / (np * nq) + 1.0) / 2.0)
}

/// d(similarity)/d(p, q) scaled by `upstream`, added into `dp` / `dq`.
/// The zero-vector convention has zero gradient.
pub fn similarity_backward(
    p: &Array1<f64>,
    q: &Array1<f64>,
    upstream: f64,
    dp: &mut Array1<f64>,
    dq: &mut Array1<f64>,
) {
    let np = p.dot(p).sqrt();
    let nq = q.dot(q).sqrt();
    if np == 0.0 || nq == 0.0 {
        return;
    }
    let cos = p.dot(q) / (np * nq);
    let scale = upstream * 0.5;
    dp.scaled_add(scale / (np * nq), q);
    dp.scaled_add(-scale * cos / (np * np), p);
    dq.scaled_add(scale / (np * nq), p);
    dq.scaled_add(-scale * cos / (nq * nq), q);
}

/// Forward state of one rule's learned confidence: psi = similarity * PCA.
pub struct TracedRuleScore {
    pub psi: f64,
    pub sim: f64,
    pub pca: f64,
    pub trace: PathTrace,
}

/// psi for `rule` against the head vector selected by `target`, keeping the
/// forward trace for backprop. The PCA prior is a constant, never learned.
pub fn rule_score_traced(
    params: &ModelParams,
    form: GruForm,
    rule: &TemporalRule,
    target: ScoreTarget,
    pca: f64,
) -> Result<TracedRuleScore> {
    params.check_relation(rule.head)?;
    let trace = path_embedding_traced(params, form, rule)?;
    let head = params.head_table(target).row(rule.head.idx()).to_owned();
    let sim = similarity(&trace.h, &head)?;
    Ok(TracedRuleScore {
        psi: sim * pca,
        sim,
        pca,
        trace,
    })
}

/// psi without a trace.
pub fn rule_score(
    params: &ModelParams,
    form: GruForm,
    rule: &TemporalRule,
    target: ScoreTarget,
    pca: f64,
) -> Result<f64> {
    Ok(rule_score_traced(params, form, rule, target, pca)?.psi)
}

/// Backprop `d_loss/d_psi` for one traced rule score into `grads`.
pub fn backward_rule_score(
    params: &ModelParams,
    form: GruForm,
    rule: &TemporalRule,
    target: ScoreTarget,
    scored: &TracedRuleScore,
    dpsi: f64,
    grads: &mut ModelParams,
) {
    let dsim = dpsi * scored.pca;
    let head = params.head_table(target).row(rule.head.idx()).to_owned();
    let mut dp = Array1::zeros(params.dim);
    let mut dq = Array1::zeros(params.dim);
    similarity_backward(&scored.trace.h, &head, dsim, &mut dp, &mut dq);
    grads
        .head_table_mut(target)
        .row_mut(rule.head.idx())
        .scaled_add(1.0, &dq);
    backward_path(params, form, rule, &scored.trace, &dp, grads);
}
