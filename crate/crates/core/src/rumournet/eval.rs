use serde::{Deserialize, Serialize};

use super::model::BigcnParams;
use super::train::{predict, LabelledGraph};
use super::RumourError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub support: usize,
}

/// One line of the cross-dataset evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossEvalReport {
    pub train_set: String,
    pub test_set: String,
    pub examples: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
}

/// Accuracy and per-class precision/recall. A class never predicted has
/// precision 0; a class absent from the labels has recall 0.
pub fn classification_metrics(predicted: &[usize], actual: &[usize], classes: usize) -> (f64, Vec<ClassMetrics>) {
    let correct = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    let accuracy = if actual.is_empty() { 0.0 } else { correct as f64 / actual.len() as f64 };
    let per_class = (0..classes)
        .map(|c| {
            let tp = predicted.iter().zip(actual).filter(|&(&p, &a)| p == c && a == c).count();
            let predicted_c = predicted.iter().filter(|&&p| p == c).count();
            let support = actual.iter().filter(|&&a| a == c).count();
            let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
            ClassMetrics { class: c, precision: ratio(tp, predicted_c), recall: ratio(tp, support), support }
        })
        .collect();
    (accuracy, per_class)
}

pub fn evaluate_cross_dataset(
    params: &BigcnParams,
    train_set: &str,
    test_set: &str,
    data: &[LabelledGraph],
) -> Result<CrossEvalReport, RumourError> {
    if data.is_empty() {
        return Err(RumourError::EmptyDataset);
    }
    let predicted = data.iter().map(|ex| predict(params, &ex.graph)).collect::<Result<Vec<_>, _>>()?;
    let actual: Vec<usize> = data.iter().map(|ex| ex.label).collect();
    let (accuracy, per_class) = classification_metrics(&predicted, &actual, params.config.classes);
    Ok(CrossEvalReport {
        train_set: train_set.to_string(),
        test_set: test_set.to_string(),
        examples: data.len(),
        accuracy,
        per_class,
    })
}
