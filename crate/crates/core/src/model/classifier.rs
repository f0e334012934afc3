use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, TaskKind};
use super::example::{EncodedExample, EncodedInput, InputLayout, NUM_CHOICES};
use super::ModelError;
use crate::tokenizer::{TokenId, TokenizedText, SEP};

/// Half-width of the uniform initialization range.
pub const INIT_RANGE: f64 = 0.05;

/// Mean-pooled bag of embeddings followed by a tanh MLP.
///
/// Input embeddings of non-special tokens are averaged, passed through one
/// tanh hidden layer and a linear output layer. With `num_classes >= 2` the
/// outputs are class logits; with `num_classes == 1` the output is a scalar
/// score applied to each (context, option) pair of a multiple-choice input.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    config: ModelConfig,
    pub(crate) embedding: Array2<f64>,
    pub(crate) w1: Array2<f64>,
    pub(crate) b1: Array1<f64>,
    pub(crate) w2: Array2<f64>,
    pub(crate) b2: Array1<f64>,
}

/// Class probabilities for one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    /// Argmax of `probabilities`, lowest index on ties.
    pub predicted_class: usize,
    /// Whether `predicted_class` equals the gold label, when one was given.
    pub correct: Option<bool>,
}

impl Prediction {
    pub fn from_logits(logits: &[f64], label: Option<usize>) -> Self {
        let probabilities = softmax(logits);
        let predicted_class = argmax(&probabilities);
        Self {
            probabilities,
            predicted_class,
            correct: label.map(|l| l == predicted_class),
        }
    }

    /// Probability of the predicted class.
    pub fn probability(&self) -> f64 {
        self.probabilities[self.predicted_class]
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Parameter gradients. Embedding rows are stored sparsely by token id.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embedding: BTreeMap<TokenId, Array1<f64>>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Gradients {
    pub fn zeros(config: &ModelConfig) -> Self {
        Self {
            embedding: BTreeMap::new(),
            w1: Array2::zeros((config.hidden_dim, config.embed_dim)),
            b1: Array1::zeros(config.hidden_dim),
            w2: Array2::zeros((config.num_classes, config.hidden_dim)),
            b2: Array1::zeros(config.num_classes),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (id, row) in &other.embedding {
            *self
                .embedding
                .entry(*id)
                .or_insert_with(|| Array1::zeros(row.len())) += row;
        }
        self.w1 += &other.w1;
        self.b1 += &other.b1;
        self.w2 += &other.w2;
        self.b2 += &other.b2;
    }

    /// Dense copy of the embedding gradient, `vocab_size × embed_dim`.
    pub fn dense_embedding(&self, config: &ModelConfig) -> Array2<f64> {
        let mut out = Array2::zeros((config.vocab_size, config.embed_dim));
        for (id, row) in &self.embedding {
            out.row_mut(*id as usize).assign(row);
        }
        out
    }
}

struct SegmentActivations {
    pooled: Array1<f64>,
    hidden: Array1<f64>,
}

struct Activations {
    segments: Vec<SegmentActivations>,
    logits: Array1<f64>,
}

impl Classifier {
    /// Draws every parameter from uniform(−0.05, 0.05) using ChaCha8 seeded
    /// with `config.seed`, in the order embedding, w1, b1, w2, b2, then zeroes
    /// the `[PAD]` embedding row.
    pub fn init(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let dist = Uniform::new(-INIT_RANGE, INIT_RANGE).expect("valid range");
        let mut draw = |shape: (usize, usize)| {
            Array2::from_shape_simple_fn(shape, || dist.sample(&mut rng))
        };
        let mut embedding = draw((config.vocab_size, config.embed_dim));
        let w1 = draw((config.hidden_dim, config.embed_dim));
        let b1 = draw((1, config.hidden_dim)).remove_axis(Axis(0));
        let w2 = draw((config.num_classes, config.hidden_dim));
        let b2 = draw((1, config.num_classes)).remove_axis(Axis(0));
        if let Some(pad) = config.pad_id {
            embedding.row_mut(pad as usize).fill(0.0);
        }
        Ok(Self {
            config: config.clone(),
            embedding,
            w1,
            b1,
            w2,
            b2,
        })
    }

    /// All-zero parameters.
    pub fn zeros(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        Ok(Self {
            config: config.clone(),
            embedding: Array2::zeros((config.vocab_size, config.embed_dim)),
            w1: Array2::zeros((config.hidden_dim, config.embed_dim)),
            b1: Array1::zeros(config.hidden_dim),
            w2: Array2::zeros((config.num_classes, config.hidden_dim)),
            b2: Array1::zeros(config.num_classes),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn kind(&self) -> TaskKind {
        self.config.kind()
    }

    /// Parameter arrays in canonical order with their names.
    pub fn parameters(&self) -> [(&'static str, &[f64]); 5] {
        [
            ("embedding", self.embedding.as_slice().expect("standard layout")),
            ("w1", self.w1.as_slice().expect("standard layout")),
            ("b1", self.b1.as_slice().expect("standard layout")),
            ("w2", self.w2.as_slice().expect("standard layout")),
            ("b2", self.b2.as_slice().expect("standard layout")),
        ]
    }

    pub fn parameters_mut(&mut self) -> [(&'static str, &mut [f64]); 5] {
        [
            ("embedding", self.embedding.as_slice_mut().expect("standard layout")),
            ("w1", self.w1.as_slice_mut().expect("standard layout")),
            ("b1", self.b1.as_slice_mut().expect("standard layout")),
            ("w2", self.w2.as_slice_mut().expect("standard layout")),
            ("b2", self.b2.as_slice_mut().expect("standard layout")),
        ]
    }

    /// Rebuilds a classifier from flat parameter arrays in canonical order.
    pub fn from_parameters(config: ModelConfig, arrays: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        config.validate()?;
        let mut model = Self::zeros(&config)?;
        if arrays.len() != 5 {
            return Err(ModelError::ShapeMismatch(format!(
                "expected 5 parameter arrays, found {}",
                arrays.len()
            )));
        }
        for ((name, dst), src) in model.parameters_mut().into_iter().zip(arrays) {
            if dst.len() != src.len() {
                return Err(ModelError::ShapeMismatch(format!(
                    "{name}: expected {} values, found {}",
                    dst.len(),
                    src.len()
                )));
            }
            dst.copy_from_slice(&src);
        }
        Ok(model)
    }

    /// Multiplies every parameter by `factor`.
    pub fn scale_parameters(&mut self, factor: f64) {
        for (_, p) in self.parameters_mut() {
            p.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// Looks up embedding rows for `ids`.
    pub fn embed(&self, ids: &[TokenId]) -> Result<Array2<f64>, ModelError> {
        let mut out = Array2::zeros((ids.len(), self.config.embed_dim));
        for (i, &id) in ids.iter().enumerate() {
            if id as usize >= self.config.vocab_size {
                return Err(ModelError::TokenOutOfRange {
                    id,
                    vocab_size: self.config.vocab_size,
                });
            }
            out.row_mut(i).assign(&self.embedding.row(id as usize));
        }
        Ok(out)
    }

    /// Stacked input embedding matrix of an encoded input.
    pub fn input_embeddings(&self, input: &EncodedInput) -> Result<Array2<f64>, ModelError> {
        self.embed(&input.token_ids())
    }

    fn check_layout(&self, x: ArrayView2<f64>, layout: &InputLayout) -> Result<(), ModelError> {
        if layout.kind != self.kind() {
            return Err(ModelError::KindMismatch {
                model: self.kind(),
                input: layout.kind,
            });
        }
        if x.nrows() != layout.rows() || x.ncols() != self.config.embed_dim {
            return Err(ModelError::ShapeMismatch(format!(
                "input is {}×{}, layout expects {}×{}",
                x.nrows(),
                x.ncols(),
                layout.rows(),
                self.config.embed_dim
            )));
        }
        if layout.segments.is_empty() || layout.segments.iter().any(|s| s.content.is_empty()) {
            return Err(ModelError::EmptyInput);
        }
        Ok(())
    }

    fn activations(&self, x: ArrayView2<f64>, layout: &InputLayout) -> Activations {
        let mut segments = Vec::with_capacity(layout.segments.len());
        let mut outputs = Vec::with_capacity(layout.segments.len());
        for seg in &layout.segments {
            let mut pooled = Array1::zeros(self.config.embed_dim);
            for &r in &seg.content {
                pooled += &x.row(r);
            }
            pooled /= seg.content.len() as f64;
            let hidden = (self.w1.dot(&pooled) + &self.b1).mapv(f64::tanh);
            outputs.push(self.w2.dot(&hidden) + &self.b2);
            segments.push(SegmentActivations { pooled, hidden });
        }
        let logits = match layout.kind {
            TaskKind::Binary => outputs.swap_remove(0),
            TaskKind::MultipleChoice => outputs.iter().map(|o| o[0]).collect(),
        };
        Activations { segments, logits }
    }

    /// Back-propagates `dlogits` to the input rows, accumulating parameter
    /// gradients into `grads` when given.
    fn backward(
        &self,
        layout: &InputLayout,
        acts: &Activations,
        dlogits: &Array1<f64>,
        mut grads: Option<&mut Gradients>,
    ) -> Array2<f64> {
        let mut dx = Array2::zeros((layout.rows(), self.config.embed_dim));
        for (k, (seg, a)) in layout.segments.iter().zip(&acts.segments).enumerate() {
            let dout = match layout.kind {
                TaskKind::Binary => dlogits.clone(),
                TaskKind::MultipleChoice => Array1::from_elem(1, dlogits[k]),
            };
            let dhidden = self.w2.t().dot(&dout);
            let dz = dhidden * a.hidden.mapv(|h| 1.0 - h * h);
            let dpooled = self.w1.t().dot(&dz);
            if let Some(g) = grads.as_deref_mut() {
                g.w2 += &outer(&dout, &a.hidden);
                g.b2 += &dout;
                g.w1 += &outer(&dz, &a.pooled);
                g.b1 += &dz;
            }
            let share = dpooled / seg.content.len() as f64;
            for &r in &seg.content {
                dx.row_mut(r).assign(&share);
            }
        }
        dx
    }

    /// Logits for an arbitrary stacked input embedding matrix.
    pub fn logits(&self, x: ArrayView2<f64>, layout: &InputLayout) -> Result<Vec<f64>, ModelError> {
        self.check_layout(x, layout)?;
        Ok(self.activations(x, layout).logits.to_vec())
    }

    /// Probability of `target` and its gradient with respect to every input
    /// embedding row.
    pub fn target_probability_gradient(
        &self,
        x: ArrayView2<f64>,
        layout: &InputLayout,
        target: usize,
    ) -> Result<(f64, Array2<f64>), ModelError> {
        self.check_layout(x, layout)?;
        let acts = self.activations(x, layout);
        if target >= acts.logits.len() {
            return Err(ModelError::LabelOutOfRange {
                label: target,
                classes: acts.logits.len(),
            });
        }
        let p = softmax(acts.logits.as_slice().expect("contiguous"));
        let pt = p[target];
        let dlogits = Array1::from_shape_fn(p.len(), |j| {
            let delta = if j == target { 1.0 } else { 0.0 };
            pt * (delta - p[j])
        });
        Ok((pt, self.backward(layout, &acts, &dlogits, None)))
    }

    /// Probability of `target` for a stacked input embedding matrix.
    pub fn target_probability(
        &self,
        x: ArrayView2<f64>,
        layout: &InputLayout,
        target: usize,
    ) -> Result<f64, ModelError> {
        let logits = self.logits(x, layout)?;
        softmax(&logits)
            .get(target)
            .copied()
            .ok_or(ModelError::LabelOutOfRange {
                label: target,
                classes: logits.len(),
            })
    }

    pub fn predict(&self, input: &EncodedInput, label: Option<usize>) -> Result<Prediction, ModelError> {
        let x = self.input_embeddings(input)?;
        let logits = self.logits(x.view(), &input.layout())?;
        Ok(Prediction::from_logits(&logits, label))
    }

    /// Class probabilities of one tokenized text under the binary head.
    pub fn forward(&self, tok: &TokenizedText) -> Result<Prediction, ModelError> {
        self.predict(&EncodedInput::Single(tok.clone()), None)
    }

    /// Scores each `context ⧺ option ⧺ [SEP]` pair with the shared scalar
    /// head and softmaxes over the options. `context` must carry its own
    /// `[CLS]`/`[SEP]` markers.
    pub fn forward_multiple_choice(
        &self,
        context: &TokenizedText,
        options: &[TokenizedText],
    ) -> Result<Prediction, ModelError> {
        if options.len() != NUM_CHOICES {
            return Err(ModelError::OptionCountMismatch {
                expected: NUM_CHOICES,
                found: options.len(),
            });
        }
        let sep = context
            .token_strings
            .iter()
            .rposition(|t| t == SEP)
            .map(|i| context.token_ids[i])
            .ok_or(ModelError::MissingSeparator)?;
        let pairs = options.iter().map(|o| context.pair_with(o, sep)).collect();
        self.predict(&EncodedInput::Choices(pairs), None)
    }

    /// Score of a single (already paired) sequence under the scalar head.
    pub fn pair_score(&self, pair: &TokenizedText) -> Result<f64, ModelError> {
        if self.kind() != TaskKind::MultipleChoice {
            return Err(ModelError::KindMismatch {
                model: self.kind(),
                input: TaskKind::MultipleChoice,
            });
        }
        let input = EncodedInput::Choices(vec![pair.clone()]);
        let x = self.input_embeddings(&input)?;
        Ok(self.logits(x.view(), &input.layout())?[0])
    }

    /// Cross-entropy loss of one example and the gradient of every parameter.
    pub fn loss_and_gradients(&self, example: &EncodedExample) -> Result<(f64, Gradients), ModelError> {
        let ids = example.input.token_ids();
        let x = self.embed(&ids)?;
        let layout = example.input.layout();
        self.check_layout(x.view(), &layout)?;
        let acts = self.activations(x.view(), &layout);
        let logits = acts.logits.as_slice().expect("contiguous");
        if example.label >= logits.len() {
            return Err(ModelError::LabelOutOfRange {
                label: example.label,
                classes: logits.len(),
            });
        }
        let p = softmax(logits);
        let loss = cross_entropy(logits, example.label);
        let mut dlogits = Array1::from(p);
        dlogits[example.label] -= 1.0;

        let mut grads = Gradients::zeros(&self.config);
        let dx = self.backward(&layout, &acts, &dlogits, Some(&mut grads));
        for seg in &layout.segments {
            for &r in &seg.content {
                *grads
                    .embedding
                    .entry(ids[r])
                    .or_insert_with(|| Array1::zeros(self.config.embed_dim)) += &dx.row(r);
            }
        }
        Ok((loss, grads))
    }

    pub fn loss(&self, example: &EncodedExample) -> Result<f64, ModelError> {
        let x = self.input_embeddings(&example.input)?;
        let logits = self.logits(x.view(), &example.input.layout())?;
        if example.label >= logits.len() {
            return Err(ModelError::LabelOutOfRange {
                label: example.label,
                classes: logits.len(),
            });
        }
        Ok(cross_entropy(&logits, example.label))
    }

    /// `params -= step * grads`.
    pub fn apply_gradients(&mut self, grads: &Gradients, step: f64) {
        for (id, row) in &grads.embedding {
            self.embedding
                .row_mut(*id as usize)
                .scaled_add(-step, row);
        }
        self.w1.scaled_add(-step, &grads.w1);
        self.b1.scaled_add(-step, &grads.b1);
        self.w2.scaled_add(-step, &grads.w2);
        self.b2.scaled_add(-step, &grads.b2);
    }
}

/// `-log softmax(logits)[label]` computed via log-sum-exp.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let a2 = a.view().insert_axis(Axis(1));
    let b2 = b.view().insert_axis(Axis(0));
    a2.dot(&b2)
}
