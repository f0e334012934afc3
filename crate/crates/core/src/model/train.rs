use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::classifier::{Classifier, Gradients};
use super::config::{ModelConfig, Optimizer, TaskKind};
use super::example::EncodedExample;
use super::ModelError;

/// ChaCha stream used for minibatch order; stream 0 is used for init.
const SHUFFLE_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Classifier,
    /// Mean cross-entropy per epoch, measured before each batch's update.
    pub loss_trace: Vec<f64>,
}

/// All examples must share one kind; returns it.
pub fn dataset_kind(dataset: &[EncodedExample]) -> Result<TaskKind, ModelError> {
    let first = dataset.first().ok_or(ModelError::EmptyDataset)?.kind();
    if dataset.iter().any(|e| e.kind() != first) {
        return Err(ModelError::MixedKinds);
    }
    Ok(first)
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

/// First and second moment estimates, one flat buffer per parameter array.
struct Adam {
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    fn new(model: &Classifier) -> Self {
        let zeros = || model.parameters().iter().map(|(_, p)| vec![0.0; p.len()]).collect();
        Self {
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    /// One update with gradients `scale · grads`.
    fn apply(&mut self, model: &mut Classifier, grads: &Gradients, scale: f64, lr: f64) {
        self.step += 1;
        let bc1 = 1.0 - BETA1.powi(self.step);
        let bc2 = 1.0 - BETA2.powi(self.step);
        let dim = model.config().embed_dim;
        let mut params = model.parameters_mut();
        let mut update = |t: usize, i: usize, g: f64| {
            let g = g * scale;
            let m = &mut self.m[t][i];
            let v = &mut self.v[t][i];
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            params[t].1[i] -= lr * (*m / bc1) / ((*v / bc2).sqrt() + EPSILON);
        };
        for (id, row) in &grads.embedding {
            let offset = *id as usize * dim;
            for (d, g) in row.iter().enumerate() {
                update(0, offset + d, *g);
            }
        }
        let dense = [
            grads.w1.as_slice().expect("standard layout"),
            grads.b1.as_slice().expect("standard layout"),
            grads.w2.as_slice().expect("standard layout"),
            grads.b2.as_slice().expect("standard layout"),
        ];
        for (t, g) in dense.iter().enumerate() {
            for (i, g) in g.iter().enumerate() {
                update(t + 1, i, *g);
            }
        }
    }
}

/// Minibatch gradient descent on cross-entropy.
///
/// Uses `optimizer`, `learning_rate`, `epochs`, `batch_size` and `seed` from `config`. Each
/// epoch visits the examples in an order shuffled by a ChaCha8 stream derived
/// from the seed, so results depend only on (seed, data, config). Batch
/// gradients are averaged.
pub fn train(
    model: &Classifier,
    dataset: &[EncodedExample],
    config: &ModelConfig,
) -> Result<TrainOutcome, ModelError> {
    config.validate()?;
    let kind = dataset_kind(dataset)?;
    if kind != model.kind() {
        return Err(ModelError::KindMismatch {
            model: model.kind(),
            input: kind,
        });
    }
    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let mut adam = Adam::new(&model);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = Gradients::zeros(model.config());
            for &i in batch {
                let (loss, g) = model.loss_and_gradients(&dataset[i])?;
                epoch_loss += loss;
                grads.add_assign(&g);
            }
            let scale = 1.0 / batch.len() as f64;
            match config.optimizer {
                Optimizer::Sgd => model.apply_gradients(&grads, config.learning_rate * scale),
                Optimizer::Adam => adam.apply(&mut model, &grads, scale, config.learning_rate),
            }
        }
        loss_trace.push(epoch_loss / dataset.len() as f64);
    }
    Ok(TrainOutcome { model, loss_trace })
}
