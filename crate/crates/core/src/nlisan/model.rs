use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NlisanError;
use crate::checkpoint::{Checkpoint, CheckpointError};
use crate::optim::ParamSet;

pub const CLASS_FALSE: usize = 0;
pub const CLASS_TRUE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NlisanConfig {
    /// Pair representation width.
    pub d: usize,
    /// Attention width.
    pub h: usize,
    /// Evidence slots.
    pub n_slots: usize,
    /// MLP hidden width.
    pub m: usize,
}

impl Default for NlisanConfig {
    fn default() -> Self {
        NlisanConfig { d: 64, h: 16, n_slots: 10, m: 32 }
    }
}

/// Query from NLI triplets, key and value from pair representations, then a
/// one-hidden-layer MLP over the concatenated attention outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct NlisanParams {
    pub config: NlisanConfig,
    pub w_q: Array2<f64>,
    pub w_k: Array2<f64>,
    pub w_v: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit);
    Array2::from_shape_fn((rows, cols), |_| dist.sample(rng))
}

impl NlisanParams {
    pub fn init(config: NlisanConfig, seed: u64) -> Self {
        let NlisanConfig { d, h, n_slots, m } = config;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        NlisanParams {
            config,
            w_q: glorot(&mut rng, 3, h),
            w_k: glorot(&mut rng, d, h),
            w_v: glorot(&mut rng, d, h),
            w1: glorot(&mut rng, n_slots * h, m),
            b1: Array1::zeros(m),
            w2: glorot(&mut rng, m, 2),
            b2: Array1::zeros(2),
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let c = self.config;
        let mut ck = Checkpoint::new("nlisan")
            .with_arch("d", c.d)
            .with_arch("h", c.h)
            .with_arch("n", c.n_slots)
            .with_arch("m", c.m);
        ck.push("w_q", self.w_q.clone());
        ck.push("w_k", self.w_k.clone());
        ck.push("w_v", self.w_v.clone());
        ck.push("w1", self.w1.clone());
        ck.push("b1", self.b1.clone().insert_axis(Axis(0)));
        ck.push("w2", self.w2.clone());
        ck.push("b2", self.b2.clone().insert_axis(Axis(0)));
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, CheckpointError> {
        if ck.model != "nlisan" {
            return Err(CheckpointError::Format(format!("expected an nlisan checkpoint, found {}", ck.model)));
        }
        let config = NlisanConfig {
            d: ck.arch_usize("d")?,
            h: ck.arch_usize("h")?,
            n_slots: ck.arch_usize("n")?,
            m: ck.arch_usize("m")?,
        };
        let NlisanConfig { d, h, n_slots, m } = config;
        Ok(NlisanParams {
            config,
            w_q: ck.tensor("w_q", 3, h)?,
            w_k: ck.tensor("w_k", d, h)?,
            w_v: ck.tensor("w_v", d, h)?,
            w1: ck.tensor("w1", n_slots * h, m)?,
            b1: ck.tensor("b1", 1, m)?.row(0).to_owned(),
            w2: ck.tensor("w2", m, 2)?,
            b2: ck.tensor("b2", 1, 2)?.row(0).to_owned(),
        })
    }
}

impl ParamSet for NlisanParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.w_q.as_slice().unwrap(),
            self.w_k.as_slice().unwrap(),
            self.w_v.as_slice().unwrap(),
            self.w1.as_slice().unwrap(),
            self.b1.as_slice().unwrap(),
            self.w2.as_slice().unwrap(),
            self.b2.as_slice().unwrap(),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w_q.as_slice_mut().unwrap(),
            self.w_k.as_slice_mut().unwrap(),
            self.w_v.as_slice_mut().unwrap(),
            self.w1.as_slice_mut().unwrap(),
            self.b1.as_slice_mut().unwrap(),
            self.w2.as_slice_mut().unwrap(),
            self.b2.as_slice_mut().unwrap(),
        ]
    }
}

/// Model inputs for one claim: a pair representation and NLI triplet per
/// slot, with absent slots masked out.
#[derive(Debug, Clone, PartialEq)]
pub struct PairInputs {
    /// n_slots × d.
    pub pairs: Array2<f64>,
    /// n_slots × 3, columns (contradiction, neutral, entailment).
    pub triplets: Array2<f64>,
    pub present: Vec<bool>,
}

impl PairInputs {
    pub fn present_count(&self) -> usize {
        self.present.iter().filter(|p| **p).count()
    }
}

#[derive(Debug, Clone)]
pub struct AttentionOutput {
    /// Slot outputs concatenated in slot order (length n_slots·h).
    pub concat: Array1<f64>,
    /// n_slots × n_slots; row i holds slot i's weights over the present
    /// slots. Rows and columns of absent slots are zero.
    pub weights: Array2<f64>,
    pub(crate) q: Array2<f64>,
    pub(crate) k: Array2<f64>,
    pub(crate) v: Array2<f64>,
}

fn check_shapes(params: &NlisanParams, inputs: &PairInputs) -> Result<(), NlisanError> {
    let c = params.config;
    let ok = inputs.pairs.dim() == (c.n_slots, c.d)
        && inputs.triplets.dim() == (c.n_slots, 3)
        && inputs.present.len() == c.n_slots
        && params.w_q.dim() == (3, c.h)
        && params.w_k.dim() == (c.d, c.h)
        && params.w_v.dim() == (c.d, c.h)
        && params.w1.dim() == (c.n_slots * c.h, c.m)
        && params.b1.len() == c.m
        && params.w2.dim() == (c.m, 2)
        && params.b2.len() == 2;
    if ok {
        Ok(())
    } else {
        Err(NlisanError::ShapeMismatch)
    }
}

/// Cross-pair attention: each present slot's query attends over the keys of
/// all present slots, scaled by 1/√h.
pub fn attention_forward(params: &NlisanParams, inputs: &PairInputs) -> Result<AttentionOutput, NlisanError> {
    check_shapes(params, inputs)?;
    let NlisanConfig { h, n_slots, .. } = params.config;
    let q = inputs.triplets.dot(&params.w_q);
    let k = inputs.pairs.dot(&params.w_k);
    let v = inputs.pairs.dot(&params.w_v);
    let scale = 1.0 / (h as f64).sqrt();
    let present: Vec<usize> = (0..n_slots).filter(|&i| inputs.present[i]).collect();

    let mut weights = Array2::zeros((n_slots, n_slots));
    let mut out = Array2::zeros((n_slots, h));
    for &i in &present {
        let logits: Vec<f64> = present.iter().map(|&j| q.row(i).dot(&k.row(j)) * scale).collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        for (&j, e) in present.iter().zip(&exps) {
            let a = e / z;
            weights[[i, j]] = a;
            out.row_mut(i).scaled_add(a, &v.row(j));
        }
    }
    let concat = Array1::from_iter(out.iter().copied());
    Ok(AttentionOutput { concat, weights, q, k, v })
}

pub(crate) struct ForwardPass {
    pub attention: AttentionOutput,
    pub z1: Array1<f64>,
    pub a1: Array1<f64>,
    pub probs: Array1<f64>,
}

fn softmax(logits: ArrayView1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let e = logits.mapv(|x| (x - max).exp());
    let z = e.sum();
    e / z
}

pub(crate) fn forward(params: &NlisanParams, inputs: &PairInputs) -> Result<ForwardPass, NlisanError> {
    let attention = attention_forward(params, inputs)?;
    let z1 = attention.concat.dot(&params.w1) + &params.b1;
    let a1 = z1.mapv(|x| x.max(0.0));
    let logits = a1.dot(&params.w2) + &params.b2;
    let probs = softmax(logits.view());
    Ok(ForwardPass { attention, z1, a1, probs })
}

/// Class probabilities `[p_false, p_true]`.
pub fn predict_proba(params: &NlisanParams, inputs: &PairInputs) -> Result<[f64; 2], NlisanError> {
    let f = forward(params, inputs)?;
    Ok([f.probs[CLASS_FALSE], f.probs[CLASS_TRUE]])
}

/// Cross-entropy of `label` (0 = False, 1 = True).
pub fn loss(params: &NlisanParams, inputs: &PairInputs, label: usize) -> Result<f64, NlisanError> {
    let f = forward(params, inputs)?;
    Ok(-f.probs[label].max(f64::MIN_POSITIVE).ln())
}

/// Loss and its gradient with respect to every parameter.
pub fn loss_and_grad(
    params: &NlisanParams,
    inputs: &PairInputs,
    label: usize,
) -> Result<(f64, NlisanParams), NlisanError> {
    let NlisanConfig { h, n_slots, m, .. } = params.config;
    let f = forward(params, inputs)?;
    let loss = -f.probs[label].max(f64::MIN_POSITIVE).ln();
    let mut g = params.zeros_like();

    let mut dlogits = f.probs.clone();
    dlogits[label] -= 1.0;
    for a in 0..m {
        for c in 0..2 {
            g.w2[[a, c]] = f.a1[a] * dlogits[c];
        }
    }
    g.b2.assign(&dlogits);
    let da1 = params.w2.dot(&dlogits);
    let dz1 = Array1::from_iter((0..m).map(|a| if f.z1[a] > 0.0 { da1[a] } else { 0.0 }));
    for (r, o) in f.attention.concat.iter().enumerate() {
        g.w1.row_mut(r).scaled_add(*o, &dz1);
    }
    g.b1.assign(&dz1);
    let d_concat = params.w1.dot(&dz1);
    let d_out = d_concat.into_shape_with_order((n_slots, h)).expect("n_slots·h");

    let att = &f.attention;
    let scale = 1.0 / (h as f64).sqrt();
    let present: Vec<usize> = (0..n_slots).filter(|&i| inputs.present[i]).collect();
    let mut dq = Array2::<f64>::zeros((n_slots, h));
    let mut dk = Array2::<f64>::zeros((n_slots, h));
    let mut dv = Array2::<f64>::zeros((n_slots, h));
    for &i in &present {
        let d_oi = d_out.row(i);
        let d_alpha: Vec<f64> = present.iter().map(|&j| d_oi.dot(&att.v.row(j))).collect();
        let mean: f64 = present.iter().zip(&d_alpha).map(|(&j, da)| att.weights[[i, j]] * da).sum();
        for (idx, &j) in present.iter().enumerate() {
            let a = att.weights[[i, j]];
            dv.row_mut(j).scaled_add(a, &d_oi);
            let d_logit = a * (d_alpha[idx] - mean) * scale;
            dq.row_mut(i).scaled_add(d_logit, &att.k.row(j));
            dk.row_mut(j).scaled_add(d_logit, &att.q.row(i));
        }
    }
    // ParamSet slices need standard layout.
    g.w_q = inputs.triplets.t().dot(&dq).as_standard_layout().into_owned();
    g.w_k = inputs.pairs.t().dot(&dk).as_standard_layout().into_owned();
    g.w_v = inputs.pairs.t().dot(&dv).as_standard_layout().into_owned();
    Ok((loss, g))
}
