//! Veracity classifier over claim–evidence pairs.
//!
//! Each claim is paired with up to `n_slots` pieces of evidence. A pair's
//! dense representation supplies key and value, its NLI triplet supplies the
//! query; attention runs across all present pairs, the per-slot outputs are
//! concatenated and an MLP produces True/False probabilities.

mod model;
mod train;

pub use model::{
    attention_forward, loss, loss_and_grad, predict_proba, AttentionOutput, NlisanConfig, NlisanParams, PairInputs,
    CLASS_FALSE, CLASS_TRUE,
};
pub use train::{accuracy, gradient_check, train, NlisanExample, TrainOutcome};
pub use crate::optim::TrainConfig;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::{NliProvider, NliTriplet};
use crate::retrieval::{Encoder, EvidenceRecord};

/// Separator placed between claim and evidence before encoding a pair.
pub const PAIR_SEPARATOR: &str = " ||| ";

#[derive(Debug, Error, PartialEq)]
pub enum NlisanError {
    #[error("no evidence for the claim")]
    NoEvidence,
    #[error("tensor shapes do not match the model configuration")]
    ShapeMismatch,
    #[error("empty training set")]
    EmptyDataset,
    #[error("training diverged: loss is not finite")]
    NonFinite,
}

/// Anything that can fill an evidence slot.
pub trait EvidenceText {
    fn text(&self) -> &str;
    fn relevance(&self) -> f64;
}

impl EvidenceText for EvidenceRecord {
    fn text(&self) -> &str {
        &self.text
    }
    fn relevance(&self) -> f64 {
        self.relevance
    }
}

impl<S: AsRef<str>> EvidenceText for (S, f64) {
    fn text(&self) -> &str {
        self.0.as_ref()
    }
    fn relevance(&self) -> f64 {
        self.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    True,
    False,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VeracityResult {
    pub label: Verdict,
    pub p_true: f64,
    pub p_false: f64,
    /// Attention weights among the real evidence slots; each row sums to 1.
    pub attention: Vec<Vec<f64>>,
}

/// Builds model inputs for a claim. Evidence beyond `n_slots` is dropped,
/// keeping the most relevant; remaining slots are padded with a zero pair
/// vector and the neutral triplet (0, 1, 0), and masked out.
pub fn assemble_inputs<E: EvidenceText>(
    claim: &str,
    evidences: &[E],
    encoder: &dyn Encoder,
    nli: &dyn NliProvider,
    config: &NlisanConfig,
) -> Result<PairInputs, NlisanError> {
    if evidences.is_empty() {
        return Err(NlisanError::NoEvidence);
    }
    if encoder.dim() != config.d {
        return Err(NlisanError::ShapeMismatch);
    }
    let mut order: Vec<usize> = (0..evidences.len()).collect();
    order.sort_by(|&a, &b| evidences[b].relevance().total_cmp(&evidences[a].relevance()).then(a.cmp(&b)));
    order.truncate(config.n_slots);

    let mut pairs = Array2::zeros((config.n_slots, config.d));
    let mut triplets = Array2::zeros((config.n_slots, 3));
    let mut present = vec![false; config.n_slots];
    for slot in 0..config.n_slots {
        let triplet = match order.get(slot) {
            Some(&i) => {
                let text = evidences[i].text();
                let s = encoder.encode(&format!("{claim}{PAIR_SEPARATOR}{text}"));
                pairs.row_mut(slot).assign(&ndarray::ArrayView1::from(&s));
                present[slot] = true;
                nli.infer(text, claim)
            }
            None => NliTriplet::NEUTRAL,
        };
        triplets.row_mut(slot).assign(&ndarray::ArrayView1::from(&triplet.as_array()));
    }
    Ok(PairInputs { pairs, triplets, present })
}

pub fn classify_inputs(params: &NlisanParams, inputs: &PairInputs) -> Result<VeracityResult, NlisanError> {
    let [p_false, p_true] = predict_proba(params, inputs)?;
    let att = attention_forward(params, inputs)?;
    let present: Vec<usize> = (0..inputs.present.len()).filter(|&i| inputs.present[i]).collect();
    let attention = present.iter().map(|&i| present.iter().map(|&j| att.weights[[i, j]]).collect()).collect();
    Ok(VeracityResult {
        label: if p_true >= 0.5 { Verdict::True } else { Verdict::False },
        p_true,
        p_false,
        attention,
    })
}

pub fn classify<E: EvidenceText>(
    params: &NlisanParams,
    claim: &str,
    evidences: &[E],
    encoder: &dyn Encoder,
    nli: &dyn NliProvider,
) -> Result<VeracityResult, NlisanError> {
    let inputs = assemble_inputs(claim, evidences, encoder, nli, &params.config)?;
    classify_inputs(params, &inputs)
}
