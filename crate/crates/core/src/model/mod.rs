//! Desk-scale differentiable text classifier: a mean-pooled embedding bag
//! feeding a tanh MLP, with a binary head and a SWAG-style multiple-choice
//! head, analytic gradients, minibatch training and evaluation.

mod checkpoint;
mod classifier;
mod config;
mod example;
mod metrics;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use classifier::{argmax, cross_entropy, softmax, Classifier, Gradients, Prediction, INIT_RANGE};
pub use config::{ModelConfig, Optimizer, TaskKind};
pub use example::{EncodedExample, EncodedInput, Example, InputLayout, Segment, NUM_CHOICES};
pub use metrics::{evaluate, summarize, Confusion, Evaluation};
pub use train::{dataset_kind, train, TrainOutcome};

/// Builds a classifier from `config` (see [`Classifier::init`]).
pub fn init_model(config: &ModelConfig) -> Result<Classifier, ModelError> {
    Classifier::init(config)
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("input has no non-special tokens")]
    EmptyInput,
    #[error("token id {id} outside vocabulary of {vocab_size}")]
    TokenOutOfRange { id: u32, vocab_size: usize },
    #[error("expected {expected} options, found {found}")]
    OptionCountMismatch { expected: usize, found: usize },
    #[error("label {label} outside {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("context has no [SEP] marker")]
    MissingSeparator,
    #[error("model head is {model:?} but input is {input:?}")]
    KindMismatch { model: TaskKind, input: TaskKind },
    #[error("dataset mixes binary and multiple-choice examples")]
    MixedKinds,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
