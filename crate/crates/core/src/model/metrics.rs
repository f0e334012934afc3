use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifier::{Classifier, Prediction};
use super::config::TaskKind;
use super::example::EncodedExample;
use super::train::dataset_kind;
use super::ModelError;

/// Binary confusion counts with class 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

impl Confusion {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut c = Confusion::default();
        for (predicted, label) in pairs {
            match (predicted == 1, label == 1) {
                (true, true) => c.true_positive += 1,
                (true, false) => c.false_positive += 1,
                (false, false) => c.true_negative += 1,
                (false, true) => c.false_negative += 1,
            }
        }
        c
    }

    /// `2TP / (2TP + FP + FN)`; 1.0 when there are no positives at all, since
    /// predictions and labels then agree everywhere on the positive class.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.true_positive + self.false_positive + self.false_negative;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.true_positive as f64 / denom as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        let total =
            self.true_positive + self.false_positive + self.true_negative + self.false_negative;
        (self.true_positive + self.true_negative) as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// Positive-class F1 for binary tasks; absent for multiple choice.
    pub f1: Option<f64>,
    pub confusion: Option<Confusion>,
    /// One prediction per example, in dataset order.
    pub predictions: Vec<Prediction>,
}

/// Predicts every example and summarizes accuracy (and F1 for binary tasks).
pub fn evaluate(model: &Classifier, dataset: &[EncodedExample]) -> Result<Evaluation, ModelError> {
    let kind = dataset_kind(dataset)?;
    let predictions = dataset
        .par_iter()
        .map(|ex| model.predict(&ex.input, Some(ex.label)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(kind, dataset.iter().map(|e| e.label), predictions))
}

/// Builds an [`Evaluation`] from predictions already made.
pub fn summarize(
    kind: TaskKind,
    labels: impl IntoIterator<Item = usize>,
    predictions: Vec<Prediction>,
) -> Evaluation {
    let labels: Vec<usize> = labels.into_iter().collect();
    let correct = predictions
        .iter()
        .zip(&labels)
        .filter(|(p, l)| p.predicted_class == **l)
        .count();
    let accuracy = correct as f64 / predictions.len().max(1) as f64;
    let confusion = (kind == TaskKind::Binary).then(|| {
        Confusion::from_pairs(
            predictions
                .iter()
                .zip(&labels)
                .map(|(p, l)| (p.predicted_class, *l)),
        )
    });
    Evaluation {
        accuracy,
        f1: confusion.map(|c| c.f1()),
        confusion,
        predictions,
    }
}
