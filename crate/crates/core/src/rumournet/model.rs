use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{drop_edge_with, normalize_adjacency, TreeGraph};
use super::RumourError;
use crate::checkpoint::{Checkpoint, CheckpointError};
use crate::optim::ParamSet;

/// Class 0 is always the non-rumour class; with two classes, class 1 is
/// rumour.
pub const CLASS_NON_RUMOUR: usize = 0;
pub const CLASS_RUMOUR: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigcnConfig {
    pub d: usize,
    pub h1: usize,
    pub h2: usize,
    pub classes: usize,
    pub dropedge_rate: f64,
}

impl Default for BigcnConfig {
    fn default() -> Self {
        BigcnConfig { d: 64, h1: 32, h2: 32, classes: 2, dropedge_rate: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionParams {
    /// d × h1.
    pub w1: Array2<f64>,
    /// (h1 + d) × h2; the last d rows read the root features.
    pub w2: Array2<f64>,
}

/// Top-down and bottom-up graph convolution stacks plus a linear classifier
/// over both directions' pooled states.
#[derive(Debug, Clone, PartialEq)]
pub struct BigcnParams {
    pub config: BigcnConfig,
    pub td: DirectionParams,
    pub bu: DirectionParams,
    /// 2·(h2 + h1) × C.
    pub w_c: Array2<f64>,
    pub b_c: Array1<f64>,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit);
    Array2::from_shape_fn((rows, cols), |_| dist.sample(rng))
}

impl BigcnParams {
    pub fn init(config: BigcnConfig, seed: u64) -> Self {
        let BigcnConfig { d, h1, h2, classes, .. } = config;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let direction = |rng: &mut ChaCha8Rng| DirectionParams { w1: glorot(rng, d, h1), w2: glorot(rng, h1 + d, h2) };
        let td = direction(&mut rng);
        let bu = direction(&mut rng);
        BigcnParams { config, td, bu, w_c: glorot(&mut rng, 2 * (h2 + h1), classes), b_c: Array1::zeros(classes) }
    }

    pub fn pooled_width(&self) -> usize {
        self.config.h1 + self.config.h2
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let c = self.config;
        let mut ck = Checkpoint::new("bigcn")
            .with_arch("d", c.d)
            .with_arch("h1", c.h1)
            .with_arch("h2", c.h2)
            .with_arch("c", c.classes)
            .with_arch("dropedge", c.dropedge_rate);
        ck.push("td_w1", self.td.w1.clone());
        ck.push("td_w2", self.td.w2.clone());
        ck.push("bu_w1", self.bu.w1.clone());
        ck.push("bu_w2", self.bu.w2.clone());
        ck.push("w_c", self.w_c.clone());
        ck.push("b_c", self.b_c.clone().insert_axis(Axis(0)));
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, CheckpointError> {
        if ck.model != "bigcn" {
            return Err(CheckpointError::Format(format!("expected a bigcn checkpoint, found {}", ck.model)));
        }
        let config = BigcnConfig {
            d: ck.arch_usize("d")?,
            h1: ck.arch_usize("h1")?,
            h2: ck.arch_usize("h2")?,
            classes: ck.arch_usize("c")?,
            dropedge_rate: ck.arch_f64("dropedge")?,
        };
        let BigcnConfig { d, h1, h2, classes, .. } = config;
        Ok(BigcnParams {
            config,
            td: DirectionParams { w1: ck.tensor("td_w1", d, h1)?, w2: ck.tensor("td_w2", h1 + d, h2)? },
            bu: DirectionParams { w1: ck.tensor("bu_w1", d, h1)?, w2: ck.tensor("bu_w2", h1 + d, h2)? },
            w_c: ck.tensor("w_c", 2 * (h2 + h1), classes)?,
            b_c: ck.tensor("b_c", 1, classes)?.row(0).to_owned(),
        })
    }
}

impl ParamSet for BigcnParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.td.w1.as_slice().unwrap(),
            self.td.w2.as_slice().unwrap(),
            self.bu.w1.as_slice().unwrap(),
            self.bu.w2.as_slice().unwrap(),
            self.w_c.as_slice().unwrap(),
            self.b_c.as_slice().unwrap(),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.td.w1.as_slice_mut().unwrap(),
            self.td.w2.as_slice_mut().unwrap(),
            self.bu.w1.as_slice_mut().unwrap(),
            self.bu.w2.as_slice_mut().unwrap(),
            self.w_c.as_slice_mut().unwrap(),
            self.b_c.as_slice_mut().unwrap(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BigcnOutput {
    pub logits: Array1<f64>,
    pub probs: Array1<f64>,
    /// `[mean H2 | mean H1]` for the top-down direction.
    pub pooled_td: Array1<f64>,
    pub pooled_bu: Array1<f64>,
}

impl BigcnOutput {
    /// Probability of any rumour class: `1 − p(non-rumour)`.
    pub fn rumour_probability(&self) -> f64 {
        (1.0 - self.probs[CLASS_NON_RUMOUR]).clamp(0.0, 1.0)
    }
}

struct DirectionPass {
    a_hat: Array2<f64>,
    m1: Array2<f64>,
    z1: Array2<f64>,
    m2: Array2<f64>,
    z2: Array2<f64>,
    pooled: Array1<f64>,
}

fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| v.max(0.0))
}

fn direction_forward(p: &DirectionParams, a_hat: Array2<f64>, x: &Array2<f64>, root: usize) -> DirectionPass {
    let n = x.nrows();
    let m1 = a_hat.dot(x);
    let z1 = m1.dot(&p.w1);
    let h1 = relu(&z1);
    let root_rows = x.row(root).insert_axis(Axis(0)).broadcast((n, x.ncols())).unwrap().to_owned();
    let h1r = concatenate![Axis(1), h1, root_rows];
    let m2 = a_hat.dot(&h1r);
    let z2 = m2.dot(&p.w2);
    let h2 = relu(&z2);
    let pooled = concatenate![Axis(0), h2.mean_axis(Axis(0)).unwrap(), h1.mean_axis(Axis(0)).unwrap()];
    DirectionPass { a_hat, m1, z1, m2, z2, pooled }
}

pub(crate) struct ForwardPass {
    td: DirectionPass,
    bu: DirectionPass,
    pub(crate) output: BigcnOutput,
}

fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let e = logits.mapv(|l| (l - max).exp());
    let z = e.sum();
    e / z
}

fn check_shapes(params: &BigcnParams, graph: &TreeGraph) -> Result<(), RumourError> {
    let n = graph.n();
    let ok = n > 0
        && graph.dim() == params.config.d
        && graph.a_td.dim() == (n, n)
        && graph.root_index < n
        && params.config.classes >= 2;
    if ok {
        Ok(())
    } else {
        Err(RumourError::ShapeMismatch)
    }
}

/// Adjacencies for one pass. Training draws DropEdge masks independently for
/// each direction from `seed`.
fn adjacencies(params: &BigcnParams, graph: &TreeGraph, training: bool, seed: u64) -> Result<(Array2<f64>, Array2<f64>), RumourError> {
    if training {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rate = params.config.dropedge_rate;
        let td = drop_edge_with(&graph.a_td, rate, &mut rng)?;
        let bu = drop_edge_with(&graph.a_td, rate, &mut rng)?.reversed_axes();
        Ok((normalize_adjacency(&td), normalize_adjacency(&bu)))
    } else {
        Ok((normalize_adjacency(&graph.a_td), normalize_adjacency(&graph.a_bu())))
    }
}

pub(crate) fn forward_pass(
    params: &BigcnParams,
    graph: &TreeGraph,
    training: bool,
    seed: u64,
) -> Result<ForwardPass, RumourError> {
    check_shapes(params, graph)?;
    let (a_td, a_bu) = adjacencies(params, graph, training, seed)?;
    let td = direction_forward(&params.td, a_td, &graph.x, graph.root_index);
    let bu = direction_forward(&params.bu, a_bu, &graph.x, graph.root_index);
    let features = concatenate![Axis(0), td.pooled, bu.pooled];
    let logits = features.dot(&params.w_c) + &params.b_c;
    let probs = softmax(&logits);
    let output = BigcnOutput { logits, probs, pooled_td: td.pooled.clone(), pooled_bu: bu.pooled.clone() };
    Ok(ForwardPass { td, bu, output })
}

/// Class probabilities. DropEdge is applied only when `training` is set;
/// inference ignores `seed`.
pub fn bigcn_forward(params: &BigcnParams, graph: &TreeGraph, training: bool, seed: u64) -> Result<BigcnOutput, RumourError> {
    Ok(forward_pass(params, graph, training, seed)?.output)
}

fn check_label(params: &BigcnParams, label: usize) -> Result<(), RumourError> {
    if label < params.config.classes {
        Ok(())
    } else {
        Err(RumourError::ShapeMismatch)
    }
}

pub fn bigcn_loss(params: &BigcnParams, graph: &TreeGraph, label: usize) -> Result<f64, RumourError> {
    check_label(params, label)?;
    let out = bigcn_forward(params, graph, false, 0)?;
    Ok(-out.probs[label].max(f64::MIN_POSITIVE).ln())
}

fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

fn direction_backward(
    p: &DirectionParams,
    pass: &DirectionPass,
    d_pooled: ndarray::ArrayView1<f64>,
    h1: usize,
    h2: usize,
) -> DirectionParams {
    let n = pass.z1.nrows() as f64;
    let d_h2_mean = d_pooled.slice(s![..h2]);
    let d_h1_mean = d_pooled.slice(s![h2..]);

    let mut dz2 = Array2::from_shape_fn(pass.z2.dim(), |(_, c)| d_h2_mean[c] / n);
    dz2.zip_mut_with(&pass.z2, |g, &z| if z <= 0.0 { *g = 0.0 });
    let dw2 = pass.m2.t().dot(&dz2);
    let d_h1r = pass.a_hat.t().dot(&dz2.dot(&p.w2.t()));

    let mut dz1 = d_h1r.slice(s![.., ..h1]).to_owned();
    dz1 += &d_h1_mean.mapv(|g| g / n);
    dz1.zip_mut_with(&pass.z1, |g, &z| if z <= 0.0 { *g = 0.0 });
    let dw1 = pass.m1.t().dot(&dz1);
    DirectionParams { w1: standard(dw1), w2: standard(dw2) }
}

/// Cross-entropy and its gradient. With `training` set, the gradient is taken
/// through the DropEdge-perturbed adjacencies drawn from `seed`.
pub fn bigcn_loss_and_grad(
    params: &BigcnParams,
    graph: &TreeGraph,
    label: usize,
    training: bool,
    seed: u64,
) -> Result<(f64, BigcnParams), RumourError> {
    check_label(params, label)?;
    let pass = forward_pass(params, graph, training, seed)?;
    let probs = &pass.output.probs;
    let loss = -probs[label].max(f64::MIN_POSITIVE).ln();

    let mut d_logits = probs.clone();
    d_logits[label] -= 1.0;
    let features = concatenate![Axis(0), pass.td.pooled, pass.bu.pooled];
    let w_c = features.view().insert_axis(Axis(1)).dot(&d_logits.view().insert_axis(Axis(0)));
    let d_features = params.w_c.dot(&d_logits);

    let BigcnConfig { h1, h2, .. } = params.config;
    let width = h1 + h2;
    let td = direction_backward(&params.td, &pass.td, d_features.slice(s![..width]), h1, h2);
    let bu = direction_backward(&params.bu, &pass.bu, d_features.slice(s![width..]), h1, h2);
    Ok((loss, BigcnParams { config: params.config, td, bu, w_c: standard(w_c), b_c: d_logits }))
}
