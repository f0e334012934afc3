use ndarray::{Array2, ArrayView2};

use super::AttributionError;
use crate::model::{Classifier, InputLayout};

/// A scalar function of a stacked `rows × dim` input along with its gradient.
pub trait PathFunction {
    fn value_and_gradient(&self, x: ArrayView2<f64>) -> Result<(f64, Array2<f64>), AttributionError>;
}

/// `F(x) = Σ w ⊙ x + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer {
    pub weights: Array2<f64>,
    pub bias: f64,
}

impl PathFunction for LinearScorer {
    fn value_and_gradient(&self, x: ArrayView2<f64>) -> Result<(f64, Array2<f64>), AttributionError> {
        if x.dim() != self.weights.dim() {
            return Err(AttributionError::ShapeMismatch(format!(
                "input {:?}, weights {:?}",
                x.dim(),
                self.weights.dim()
            )));
        }
        Ok(((&x * &self.weights).sum() + self.bias, self.weights.clone()))
    }
}

/// Probability of `target` under a classifier, as a function of the input
/// embedding matrix laid out by `layout`.
#[derive(Debug, Clone)]
pub struct TargetProbability<'a> {
    pub model: &'a Classifier,
    pub layout: InputLayout,
    pub target: usize,
}

impl PathFunction for TargetProbability<'_> {
    fn value_and_gradient(&self, x: ArrayView2<f64>) -> Result<(f64, Array2<f64>), AttributionError> {
        Ok(self.model.target_probability_gradient(x, &self.layout, self.target)?)
    }
}

/// Per-element attributions plus the path endpoints' function values.
#[derive(Debug, Clone, PartialEq)]
pub struct PathIntegral {
    pub per_dim: Array2<f64>,
    pub input_value: f64,
    pub baseline_value: f64,
}

impl PathIntegral {
    pub fn attribution_sum(&self) -> f64 {
        self.per_dim.sum()
    }

    /// `|Σ attributions − (F(x) − F(x′))|`.
    pub fn completeness_gap(&self) -> f64 {
        completeness_gap(&self.per_dim, self.input_value, self.baseline_value)
    }
}

pub fn completeness_gap(per_dim: &Array2<f64>, input_value: f64, baseline_value: f64) -> f64 {
    (per_dim.sum() - (input_value - baseline_value)).abs()
}

/// Integrated gradients of `f` along the straight line from `baseline` to
/// `input`, with the path integral taken by the trapezoidal rule over
/// `steps` intervals (`steps + 1` gradient evaluations).
pub fn integrate_path(
    f: &impl PathFunction,
    input: ArrayView2<f64>,
    baseline: ArrayView2<f64>,
    steps: usize,
) -> Result<PathIntegral, AttributionError> {
    if steps == 0 {
        return Err(AttributionError::ZeroSteps);
    }
    if input.dim() != baseline.dim() {
        return Err(AttributionError::ShapeMismatch(format!(
            "input {:?}, baseline {:?}",
            input.dim(),
            baseline.dim()
        )));
    }
    let diff = &input - &baseline;
    let mut acc = Array2::<f64>::zeros(input.dim());
    let mut input_value = 0.0;
    let mut baseline_value = 0.0;
    for k in 0..=steps {
        let (value, grad) = if k == 0 {
            f.value_and_gradient(baseline)?
        } else if k == steps {
            f.value_and_gradient(input)?
        } else {
            let alpha = k as f64 / steps as f64;
            let point = &baseline + &(&diff * alpha);
            f.value_and_gradient(point.view())?
        };
        if grad.dim() != acc.dim() {
            return Err(AttributionError::ShapeMismatch(format!(
                "gradient {:?}, input {:?}",
                grad.dim(),
                acc.dim()
            )));
        }
        let weight = if k == 0 || k == steps { 0.5 } else { 1.0 };
        acc.scaled_add(weight, &grad);
        if k == 0 {
            baseline_value = value;
        }
        if k == steps {
            input_value = value;
        }
    }
    let per_dim = diff * (acc / steps as f64);
    Ok(PathIntegral {
        per_dim,
        input_value,
        baseline_value,
    })
}

/// Row sums of `per_dim`; with `normalize`, scaled to unit Euclidean norm
/// (left unchanged when all zero).
pub fn token_scores(per_dim: ArrayView2<f64>, normalize: bool) -> Vec<f64> {
    let scores: Vec<f64> = per_dim.rows().into_iter().map(|r| r.sum()).collect();
    if normalize {
        normalized(&scores)
    } else {
        scores
    }
}

pub fn normalized(scores: &[f64]) -> Vec<f64> {
    let norm = scores.iter().map(|s| s * s).sum::<f64>().sqrt();
    if norm == 0.0 {
        scores.to_vec()
    } else {
        scores.iter().map(|s| s / norm).collect()
    }
}
