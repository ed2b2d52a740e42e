//! Rumour detection over propagation trees: a bi-directional graph
//! convolutional classifier, its trainer, and claim-level aggregation.

mod eval;
mod graph;
mod model;
pub mod synthetic;
mod train;

pub use eval::{classification_metrics, evaluate_cross_dataset, ClassMetrics, CrossEvalReport};
pub use graph::{build_tree_graph, drop_edge, drop_edge_with, normalize_adjacency, TreeGraph};
pub use model::{
    bigcn_forward, bigcn_loss, bigcn_loss_and_grad, BigcnConfig, BigcnOutput, BigcnParams, DirectionParams,
    CLASS_NON_RUMOUR, CLASS_RUMOUR,
};
pub use train::{bigcn_accuracy, bigcn_gradient_check, predict, train_bigcn, BigcnTrainOutcome, LabelledGraph};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LabelProvenance, PropagationTree, RumourClass, RumourLabel};
use crate::retrieval::Encoder;

#[derive(Debug, Error, PartialEq)]
pub enum RumourError {
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("edge drop rate {0} outside [0, 1]")]
    InvalidRate(f64),
    #[error("tensor shapes do not match the model configuration")]
    ShapeMismatch,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("no trees to aggregate")]
    NoTrees,
    #[error("training diverged: loss is not finite")]
    NonFinite,
}

/// Rumour probability `r` of one tree with `n` nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeScore {
    pub tree_id: String,
    pub r: f64,
    pub n: usize,
}

pub fn score_tree(params: &BigcnParams, tree: &PropagationTree, encoder: &dyn Encoder) -> Result<TreeScore, RumourError> {
    let graph = build_tree_graph(tree, encoder)?;
    let out = bigcn_forward(params, &graph, false, 0)?;
    Ok(TreeScore { tree_id: tree.tree_id.clone(), r: out.rumour_probability(), n: tree.size() })
}

/// Size-weighted mean rumour probability `Σ nᵢrᵢ / Σ nⱼ`.
pub fn aggregate_rumour(scores: &[TreeScore]) -> Result<f64, RumourError> {
    let total: usize = scores.iter().map(|s| s.n).sum();
    if scores.is_empty() || total == 0 {
        return Err(RumourError::NoTrees);
    }
    let weighted: f64 = scores.iter().map(|s| s.n as f64 * s.r).sum();
    Ok((weighted / total as f64).clamp(0.0, 1.0))
}

/// Scores every tree without an annotated label and records a pseudo label
/// (Rumour iff `r ≥ threshold`). Returns how many trees were labelled.
pub fn pseudo_label_trees(
    params: &BigcnParams,
    trees: &mut [PropagationTree],
    encoder: &dyn Encoder,
    threshold: f64,
) -> Result<usize, RumourError> {
    let mut labelled = 0;
    for tree in trees.iter_mut() {
        if matches!(tree.rumour_label, Some(RumourLabel { provenance: LabelProvenance::Annotated, .. })) {
            continue;
        }
        let score = score_tree(params, tree, encoder)?;
        let class = if score.r >= threshold { RumourClass::Rumour } else { RumourClass::NonRumour };
        tree.rumour_prob = Some(score.r);
        tree.rumour_label = Some(RumourLabel { class, provenance: LabelProvenance::Pseudo });
        labelled += 1;
    }
    Ok(labelled)
}

/// Class index used for training: NonRumour is 0, Rumour is 1.
pub fn class_index(class: RumourClass) -> usize {
    match class {
        RumourClass::NonRumour => CLASS_NON_RUMOUR,
        RumourClass::Rumour => CLASS_RUMOUR,
    }
}
