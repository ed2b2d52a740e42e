use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::graph::TreeGraph;
use super::model::{bigcn_forward, bigcn_loss, bigcn_loss_and_grad, BigcnParams};
use super::RumourError;
use crate::optim::{check_gradients, Adam, AdamConfig, GradCheckReport, ParamSet, TrainConfig};

#[derive(Debug, Clone)]
pub struct LabelledGraph {
    pub graph: TreeGraph,
    pub label: usize,
}

#[derive(Debug, Clone)]
pub struct BigcnTrainOutcome {
    pub params: BigcnParams,
    /// Mean inference-mode loss after each epoch.
    pub loss_curve: Vec<f64>,
    pub train_accuracy: f64,
}

pub fn predict(params: &BigcnParams, graph: &TreeGraph) -> Result<usize, RumourError> {
    let out = bigcn_forward(params, graph, false, 0)?;
    let mut best = 0;
    for (i, &p) in out.probs.iter().enumerate() {
        if p > out.probs[best] {
            best = i;
        }
    }
    Ok(best)
}

pub fn bigcn_accuracy(params: &BigcnParams, data: &[LabelledGraph]) -> Result<f64, RumourError> {
    if data.is_empty() {
        return Err(RumourError::EmptyDataset);
    }
    let mut correct = 0;
    for ex in data {
        correct += usize::from(predict(params, &ex.graph)? == ex.label);
    }
    Ok(correct as f64 / data.len() as f64)
}

fn mean_loss(params: &BigcnParams, data: &[LabelledGraph]) -> Result<f64, RumourError> {
    let mut total = 0.0;
    for ex in data {
        total += bigcn_loss(params, &ex.graph, ex.label)?;
    }
    Ok(total / data.len() as f64)
}

/// Adam on mean cross-entropy with DropEdge active. Starting from a loaded
/// checkpoint instead of fresh parameters gives fine-tuning.
pub fn train_bigcn(
    mut params: BigcnParams,
    data: &[LabelledGraph],
    config: &TrainConfig,
) -> Result<BigcnTrainOutcome, RumourError> {
    if data.is_empty() {
        return Err(RumourError::EmptyDataset);
    }
    let batch = config.batch_size.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(AdamConfig { lr: config.lr, ..Default::default() }, &params);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let mut grad = params.zeros_like();
            for &i in chunk {
                let (_, g) = bigcn_loss_and_grad(&params, &data[i].graph, data[i].label, true, rng.gen())?;
                grad.add_scaled(&g, 1.0 / chunk.len() as f64);
            }
            adam.step(&mut params, &grad);
        }
        let l = mean_loss(&params, data)?;
        if !l.is_finite() {
            return Err(RumourError::NonFinite);
        }
        loss_curve.push(l);
    }
    let train_accuracy = bigcn_accuracy(&params, data)?;
    Ok(BigcnTrainOutcome { params, loss_curve, train_accuracy })
}

/// Inference-mode analytic gradient against central differences.
pub fn bigcn_gradient_check(
    params: &BigcnParams,
    graph: &TreeGraph,
    label: usize,
    step: f64,
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport, RumourError> {
    let (_, analytic) = bigcn_loss_and_grad(params, graph, label, false, 0)?;
    Ok(check_gradients(params, &analytic, |p| bigcn_loss(p, graph, label).unwrap_or(f64::NAN), samples, step, seed))
}
