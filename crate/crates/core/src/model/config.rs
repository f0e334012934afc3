use serde::{Deserialize, Serialize};

use super::ModelError;

/// Which output head a classifier carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Softmax over `num_classes` logits of one input.
    Binary,
    /// Shared scalar scorer applied per (context, option) pair, softmax over
    /// the options.
    MultipleChoice,
}

/// Update rule used by [`train`](super::train).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// `θ -= lr · g`.
    Sgd,
    /// Adam with β1 = 0.9, β2 = 0.999, ε = 1e-8. Embedding rows absent from a
    /// batch keep their moments untouched.
    #[default]
    Adam,
}

/// Hyper-parameters of the reference classifier and its training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
    #[serde(default = "default_hidden_dim")]
    pub hidden_dim: usize,
    /// 2 for the binary head; 1 (a scalar scorer) for multiple choice.
    pub num_classes: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub optimizer: Optimizer,
    /// Embedding row zeroed at initialization.
    #[serde(default = "default_pad_id")]
    pub pad_id: Option<u32>,
}

fn default_embed_dim() -> usize {
    32
}
fn default_hidden_dim() -> usize {
    64
}
fn default_learning_rate() -> f64 {
    0.01
}
fn default_epochs() -> usize {
    10
}
fn default_batch_size() -> usize {
    16
}
fn default_pad_id() -> Option<u32> {
    Some(0)
}

impl ModelConfig {
    pub fn binary(vocab_size: usize) -> Self {
        Self::with_classes(vocab_size, 2)
    }

    pub fn multiple_choice(vocab_size: usize) -> Self {
        Self::with_classes(vocab_size, 1)
    }

    pub fn for_task(kind: TaskKind, vocab_size: usize) -> Self {
        match kind {
            TaskKind::Binary => Self::binary(vocab_size),
            TaskKind::MultipleChoice => Self::multiple_choice(vocab_size),
        }
    }

    fn with_classes(vocab_size: usize, num_classes: usize) -> Self {
        Self {
            vocab_size,
            embed_dim: default_embed_dim(),
            hidden_dim: default_hidden_dim(),
            num_classes,
            seed: 0,
            learning_rate: default_learning_rate(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            optimizer: Optimizer::default(),
            pad_id: default_pad_id(),
        }
    }

    pub fn kind(&self) -> TaskKind {
        if self.num_classes == 1 {
            TaskKind::MultipleChoice
        } else {
            TaskKind::Binary
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let counts = [
            ("vocab_size", self.vocab_size),
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("num_classes", self.num_classes),
            ("batch_size", self.batch_size),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(ModelError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidConfig(
                "learning_rate must be positive and finite".into(),
            ));
        }
        if let Some(pad) = self.pad_id {
            if pad as usize >= self.vocab_size {
                return Err(ModelError::InvalidConfig(format!(
                    "pad_id {pad} outside vocabulary of {}",
                    self.vocab_size
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(ModelConfig::binary(10).validate().is_ok());
        assert_eq!(ModelConfig::multiple_choice(10).kind(), TaskKind::MultipleChoice);
    }

    #[test]
    fn rejects_zero_counts_and_bad_rate() {
        let mut c = ModelConfig::binary(10);
        c.embed_dim = 0;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::binary(10);
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::binary(10);
        c.learning_rate = f64::NAN;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::binary(10);
        c.pad_id = Some(10);
        assert!(c.validate().is_err());
    }

    #[test]
    fn serde_fills_defaults() {
        let c: ModelConfig =
            serde_json::from_str(r#"{"vocab_size": 5, "num_classes": 2}"#).unwrap();
        assert_eq!(c.embed_dim, 32);
        assert_eq!(c.hidden_dim, 64);
        assert_eq!(c.pad_id, Some(0));
    }
}
