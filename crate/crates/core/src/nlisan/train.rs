use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    assemble_inputs, loss, loss_and_grad, predict_proba, EvidenceText, NlisanError, NlisanParams, PairInputs, Verdict,
    CLASS_FALSE, CLASS_TRUE,
};
use crate::inference::NliProvider;
use crate::optim::{check_gradients, Adam, AdamConfig, GradCheckReport, ParamSet, TrainConfig};
use crate::retrieval::Encoder;

#[derive(Debug, Clone)]
pub struct NlisanExample {
    pub inputs: PairInputs,
    /// `CLASS_TRUE` or `CLASS_FALSE`.
    pub label: usize,
}

impl NlisanExample {
    pub fn from_texts<E: EvidenceText>(
        claim: &str,
        evidences: &[E],
        verdict: Verdict,
        encoder: &dyn Encoder,
        nli: &dyn NliProvider,
        params: &NlisanParams,
    ) -> Result<Self, NlisanError> {
        let inputs = assemble_inputs(claim, evidences, encoder, nli, &params.config)?;
        let label = match verdict {
            Verdict::True => CLASS_TRUE,
            Verdict::False => CLASS_FALSE,
        };
        Ok(NlisanExample { inputs, label })
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NlisanParams,
    /// Mean training loss after each epoch.
    pub loss_curve: Vec<f64>,
    pub train_accuracy: f64,
}

fn mean_loss(params: &NlisanParams, data: &[NlisanExample]) -> Result<f64, NlisanError> {
    let mut total = 0.0;
    for ex in data {
        total += loss(params, &ex.inputs, ex.label)?;
    }
    Ok(total / data.len() as f64)
}

pub fn accuracy(params: &NlisanParams, data: &[NlisanExample]) -> Result<f64, NlisanError> {
    let mut correct = 0;
    for ex in data {
        let [_, p_true] = predict_proba(params, &ex.inputs)?;
        let predicted = if p_true >= 0.5 { CLASS_TRUE } else { CLASS_FALSE };
        correct += usize::from(predicted == ex.label);
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Mini-batch Adam on mean cross-entropy. Example order is reshuffled each
/// epoch from `seed`, so a fixed seed reproduces the run bit for bit.
pub fn train(mut params: NlisanParams, data: &[NlisanExample], config: &TrainConfig) -> Result<TrainOutcome, NlisanError> {
    if data.is_empty() {
        return Err(NlisanError::EmptyDataset);
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
                let (_, g) = loss_and_grad(&params, &data[i].inputs, data[i].label)?;
                grad.add_scaled(&g, 1.0 / chunk.len() as f64);
            }
            adam.step(&mut params, &grad);
        }
        let l = mean_loss(&params, data)?;
        if !l.is_finite() {
            return Err(NlisanError::NonFinite);
        }
        loss_curve.push(l);
    }
    let train_accuracy = accuracy(&params, data)?;
    Ok(TrainOutcome { params, loss_curve, train_accuracy })
}

/// Analytic gradient against central differences on at least `samples`
/// sampled coordinates.
pub fn gradient_check(
    params: &NlisanParams,
    inputs: &PairInputs,
    label: usize,
    step: f64,
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport, NlisanError> {
    let (_, analytic) = loss_and_grad(params, inputs, label)?;
    Ok(check_gradients(params, &analytic, |p| loss(p, inputs, label).unwrap_or(f64::NAN), samples, step, seed))
}
