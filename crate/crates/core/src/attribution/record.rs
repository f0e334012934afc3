use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ig::{completeness_gap, integrate_path, token_scores, TargetProbability};
use super::AttributionError;
use crate::model::{dataset_kind, Classifier, EncodedExample, ModelError, Prediction};
use crate::tokenizer::TokenId;

pub const DEFAULT_STEPS: usize = 50;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

/// Reference input for the path integral.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum Baseline {
    /// All-zero embeddings at every position, special tokens included.
    #[default]
    Zero,
    Custom(Array2<f64>),
}

#[derive(Debug, Clone)]
pub struct AttributionRequest<'a> {
    pub example: &'a EncodedExample,
    /// Class (binary) or option (multiple choice) whose probability is attributed.
    pub target: usize,
    pub baseline: Baseline,
    pub steps: usize,
}

impl<'a> AttributionRequest<'a> {
    /// Targets the gold label with a zero baseline and the default step count.
    pub fn new(example: &'a EncodedExample) -> Self {
        Self {
            example,
            target: example.label,
            baseline: Baseline::Zero,
            steps: DEFAULT_STEPS,
        }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    fn baseline_matrix(&self, input: &Array2<f64>) -> Result<Array2<f64>, AttributionError> {
        match &self.baseline {
            Baseline::Zero => Ok(Array2::zeros(input.dim())),
            Baseline::Custom(b) if b.dim() == input.dim() => Ok(b.clone()),
            Baseline::Custom(b) => Err(AttributionError::ShapeMismatch(format!(
                "baseline {:?}, input {:?}",
                b.dim(),
                input.dim()
            ))),
        }
    }
}

/// One token position of an attributed input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenAttribution {
    pub token: String,
    pub token_id: TokenId,
    pub is_special: bool,
    /// Option index for multiple-choice inputs, 0 otherwise.
    pub segment: usize,
    pub score: f64,
}

/// Attribution outcome for one example, without the per-dimension matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRecord {
    pub example_id: String,
    pub target: usize,
    pub predicted_class: usize,
    /// Probability of the predicted class.
    pub prediction_probability: f64,
    pub correct: bool,
    /// `F(x)`: probability of the target at the input.
    pub target_probability: f64,
    /// `F(x′)`: probability of the target at the baseline.
    pub baseline_probability: f64,
    pub attribution_sum: f64,
    pub completeness_gap: f64,
    pub tokens: Vec<TokenAttribution>,
}

impl ScoredRecord {
    pub fn token_scores(&self) -> Vec<f64> {
        self.tokens.iter().map(|t| t.score).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributionRecord {
    pub scored: ScoredRecord,
    /// `tokens × embed_dim`; rows follow `scored.tokens`.
    pub per_dim: Array2<f64>,
}

/// An example whose attribution failed; kept in place of its record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributionFailure {
    pub example_id: String,
    pub message: String,
}

pub type RecordResult = Result<ScoredRecord, AttributionFailure>;

/// Integrated-gradients matrix for `req` under `model`.
pub fn integrated_gradients(
    model: &Classifier,
    req: &AttributionRequest,
) -> Result<Array2<f64>, AttributionError> {
    Ok(attribute(model, req)?.per_dim)
}

/// Attributes one example and assembles its record.
pub fn attribute(
    model: &Classifier,
    req: &AttributionRequest,
) -> Result<AttributionRecord, AttributionError> {
    let input = &req.example.input;
    let x = model.input_embeddings(input)?;
    let baseline = req.baseline_matrix(&x)?;
    let layout = input.layout();
    let logits = model.logits(x.view(), &layout)?;
    let prediction = Prediction::from_logits(&logits, Some(req.example.label));
    if req.target >= logits.len() {
        return Err(ModelError::LabelOutOfRange {
            label: req.target,
            classes: logits.len(),
        }
        .into());
    }
    let f = TargetProbability {
        model,
        layout,
        target: req.target,
    };
    let path = integrate_path(&f, x.view(), baseline.view(), req.steps)?;
    let scores = token_scores(path.per_dim.view(), false);
    let tokens = input
        .segments()
        .iter()
        .enumerate()
        .flat_map(|(k, seg)| {
            (0..seg.len()).map(move |i| (k, &seg.token_strings[i], seg.token_ids[i], seg.is_special[i]))
        })
        .zip(scores)
        .map(|((segment, token, token_id, is_special), score)| TokenAttribution {
            token: token.clone(),
            token_id,
            is_special,
            segment,
            score,
        })
        .collect();
    let scored = ScoredRecord {
        example_id: req.example.id.clone(),
        target: req.target,
        predicted_class: prediction.predicted_class,
        prediction_probability: prediction.probability(),
        correct: prediction.correct == Some(true),
        target_probability: path.input_value,
        baseline_probability: path.baseline_value,
        attribution_sum: path.attribution_sum(),
        completeness_gap: path.completeness_gap(),
        tokens,
    };
    Ok(AttributionRecord {
        scored,
        per_dim: path.per_dim,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Completeness {
    pub gap: f64,
    pub exceeds_tolerance: bool,
}

/// Recomputes `F(x) − F(x′)` for the request and compares it with the
/// record's total attribution.
pub fn completeness_check(
    record: &AttributionRecord,
    model: &Classifier,
    req: &AttributionRequest,
    tolerance: f64,
) -> Result<Completeness, AttributionError> {
    let input = &req.example.input;
    let x = model.input_embeddings(input)?;
    let baseline = req.baseline_matrix(&x)?;
    let layout = input.layout();
    let fx = model.target_probability(x.view(), &layout, req.target)?;
    let fb = model.target_probability(baseline.view(), &layout, req.target)?;
    let gap = completeness_gap(&record.per_dim, fx, fb);
    Ok(Completeness {
        gap,
        exceeds_tolerance: gap > tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttributionConfig {
    pub steps: usize,
    /// Completeness gap above which a record is reported as suspect.
    pub tolerance: f64,
    /// Divide displayed token scores by their Euclidean norm.
    pub normalize: bool,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            tolerance: DEFAULT_TOLERANCE,
            normalize: false,
            workers: 0,
        }
    }
}

/// Attributes every example against its gold label with a zero baseline.
///
/// Output order follows `dataset` whatever the worker count. Examples that
/// fail are returned as [`AttributionFailure`]s in their slot.
pub fn attribute_dataset(
    model: &Classifier,
    dataset: &[EncodedExample],
    config: &AttributionConfig,
) -> Result<Vec<Result<AttributionRecord, AttributionFailure>>, AttributionError> {
    if dataset.is_empty() {
        return Ok(Vec::new());
    }
    if config.steps == 0 {
        return Err(AttributionError::ZeroSteps);
    }
    let kind = dataset_kind(dataset)?;
    if kind != model.kind() {
        return Err(ModelError::KindMismatch {
            model: model.kind(),
            input: kind,
        }
        .into());
    }
    let run = || {
        dataset
            .par_iter()
            .map(|ex| {
                attribute(model, &AttributionRequest::new(ex).with_steps(config.steps)).map_err(|e| {
                    AttributionFailure {
                        example_id: ex.id.clone(),
                        message: e.to_string(),
                    }
                })
            })
            .collect()
    };
    if config.workers == 0 {
        Ok(run())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| AttributionError::WorkerPool(e.to_string()))?;
        Ok(pool.install(run))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Example, ModelConfig};
    use crate::tokenizer::Vocabulary;

    fn setup(kind_mc: bool) -> (Classifier, Vec<EncodedExample>) {
        let v = Vocabulary::from_tokens(["[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "b", "c"]).unwrap();
        let mut c = if kind_mc {
            ModelConfig::multiple_choice(v.len())
        } else {
            ModelConfig::binary(v.len())
        };
        c.embed_dim = 4;
        c.hidden_dim = 5;
        let mut m = Classifier::init(&c).unwrap();
        m.scale_parameters(20.0);
        let data = if kind_mc {
            vec![Example::multiple_choice("q", "a b", ["a", "b", "c", "a c", "b b"].map(String::from).to_vec(), 2)
                .unwrap()
                .encode(&v, 512)]
        } else {
            vec![
                Example::binary("x", "a b c", 1).unwrap().encode(&v, 512),
                Example::binary("y", "c c", 0).unwrap().encode(&v, 512),
            ]
        };
        (m, data)
    }

    #[test]
    fn record_invariants() {
        for mc in [false, true] {
            let (m, data) = setup(mc);
            for ex in &data {
                let req = AttributionRequest::new(ex).with_steps(200);
                let rec = attribute(&m, &req).unwrap();
                let s = &rec.scored;
                assert_eq!(s.tokens.len(), rec.per_dim.nrows());
                for (t, row) in s.tokens.iter().zip(rec.per_dim.rows()) {
                    assert_eq!(t.score, row.sum());
                }
                let total: f64 = s.tokens.iter().map(|t| t.score).sum();
                assert!((total - s.attribution_sum).abs() < 1e-12);
                assert!(s.completeness_gap <= 1e-3, "{}", s.completeness_gap);
                let check = completeness_check(&rec, &m, &req, 1e-3).unwrap();
                assert!((check.gap - s.completeness_gap).abs() < 1e-15);
                assert!(!check.exceeds_tolerance);
                assert!((0.0..=1.0).contains(&s.prediction_probability));
            }
        }
    }

    #[test]
    fn specials_are_attributed_as_zero_under_zero_baseline_padding() {
        // [PAD] has a zero embedding row, identical to the baseline.
        let (m, _) = setup(false);
        let v = Vocabulary::from_tokens(["[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "b", "c"]).unwrap();
        let mut ex = Example::binary("p", "a b", 0).unwrap().encode(&v, 512);
        if let crate::model::EncodedInput::Single(t) = &mut ex.input {
            t.token_ids.insert(1, 0);
            t.token_strings.insert(1, "[PAD]".into());
            t.word_index.insert(1, None);
            t.is_special.insert(1, true);
        }
        let rec = attribute(&m, &AttributionRequest::new(&ex)).unwrap();
        assert_eq!(rec.scored.tokens[1].score, 0.0);
        assert!(rec.per_dim.row(1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dataset_order_and_workers() {
        let (m, data) = setup(false);
        let cfg = AttributionConfig::default();
        let a = attribute_dataset(&m, &data, &cfg).unwrap();
        let b = attribute_dataset(&m, &data, &AttributionConfig { workers: 1, ..cfg.clone() }).unwrap();
        assert_eq!(a, b);
        let ids: Vec<_> = a.iter().map(|r| r.as_ref().unwrap().scored.example_id.as_str()).collect();
        assert_eq!(ids, ["x", "y"]);
        assert!(attribute_dataset(&m, &[], &cfg).unwrap().is_empty());
    }

    #[test]
    fn failures_are_kept_in_place() {
        let (m, mut data) = setup(false);
        data[0].label = 7;
        let out = attribute_dataset(&m, &data, &AttributionConfig::default()).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].as_ref().unwrap_err().example_id, "x");
        assert!(out[1].is_ok());
    }
}
