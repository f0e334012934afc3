//! Run configuration: one TOML file supplies every setting, command-line
//! flags override individual values.
//!
//! ```toml
//! task = "synthetic"          # overrule | casehold | synthetic
//! output_dir = "runs/demo"
//! workers = 0                 # 0 = one per core
//!
//! [data]                      # overrule / casehold inputs
//! train = "data/train.csv"
//! test = "data/test.csv"
//! vocab = "data/bert-base-uncased-vocab.txt"
//! extra_vocabs = [{ name = "legal", path = "vocab/legal.txt" }]
//! stoplist = "data/stopwords_en.txt"
//! phrases = "data/dunn_phrases.txt"
//! strict = false
//! max_tokens = 512
//!
//! [synthetic]
//! kind = "binary"             # binary | multiple_choice
//! train = 600
//! test = 200
//! seed = 17
//!
//! [model]
//! embed_dim = 32
//! hidden_dim = 64
//! seed = 0
//! learning_rate = 0.01
//! epochs = 10
//! batch_size = 16
//! optimizer = "adam"          # adam | sgd
//! ensemble_seeds = []         # extra models for correctness sets
//!
//! [attribution]
//! steps = 50
//! tolerance = 1e-3
//! baseline = "zero"
//! normalize = false
//!
//! [analytics]
//! top_k = 50
//! frequency_mode = "merged-word"   # merged-word | token
//! bin_width = 0.01
//! windows = [[0.10, 0.25], [-0.25, -0.10]]
//! include_specials = false
//! report_examples = 50
//! ```

use std::path::{Path, PathBuf};

use lexattr_core::analytics::{FrequencyMode, DEFAULT_BIN_WIDTH};
use lexattr_core::attribution::{AttributionConfig, DEFAULT_STEPS, DEFAULT_TOLERANCE};
use lexattr_core::model::{ModelConfig, Optimizer, TaskKind};
use lexattr_core::tokenizer::DEFAULT_MAX_TOKENS;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read config {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("{field} is required for task {task}")]
    Missing { field: &'static str, task: Task },
    #[error("{field}: path {path} does not exist")]
    MissingPath { field: String, path: PathBuf },
    #[error("invalid setting: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Overrule,
    Casehold,
    Synthetic,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Overrule => "overrule",
            Task::Casehold => "casehold",
            Task::Synthetic => "synthetic",
        })
    }
}

impl std::str::FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "overrule" => Ok(Task::Overrule),
            "casehold" => Ok(Task::Casehold),
            "synthetic" => Ok(Task::Synthetic),
            _ => Err(format!("unknown task {s:?} (overrule, casehold, synthetic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub synthetic: SyntheticConfig,
    #[serde(default)]
    pub model: ModelSettings,
    #[serde(default)]
    pub attribution: AttributionSettings,
    #[serde(default)]
    pub analytics: AnalyticsSettings,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("lexattr-out")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPath {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    /// Further vocabularies for overlap and coverage tables.
    pub extra_vocabs: Vec<NamedPath>,
    pub stoplist: Option<PathBuf>,
    pub phrases: Option<PathBuf>,
    /// Fail on the first bad row instead of reporting rejects.
    pub strict: bool,
    pub max_tokens: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            train: None,
            test: None,
            vocab: None,
            extra_vocabs: Vec::new(),
            stoplist: None,
            phrases: None,
            strict: false,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub kind: TaskKind,
    pub train: usize,
    pub test: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            kind: TaskKind::Binary,
            train: 600,
            test: 200,
            seed: 17,
        }
    }
}

/// [`ModelConfig`] minus the fields fixed by the data (vocab size, head).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    /// Seeds of additional models trained on the same data; their
    /// correctness columns feed the correctness-set tables.
    pub ensemble_seeds: Vec<u64>,
}

impl Default for ModelSettings {
    fn default() -> Self {
        let c = ModelConfig::binary(1);
        Self {
            embed_dim: c.embed_dim,
            hidden_dim: c.hidden_dim,
            seed: c.seed,
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            batch_size: c.batch_size,
            optimizer: c.optimizer,
            ensemble_seeds: Vec::new(),
        }
    }
}

impl ModelSettings {
    pub fn model_config(&self, kind: TaskKind, vocab_size: usize, seed: u64) -> ModelConfig {
        let mut c = ModelConfig::for_task(kind, vocab_size);
        c.embed_dim = self.embed_dim;
        c.hidden_dim = self.hidden_dim;
        c.seed = seed;
        c.learning_rate = self.learning_rate;
        c.epochs = self.epochs;
        c.batch_size = self.batch_size;
        c.optimizer = self.optimizer;
        c
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMode {
    /// All-zero embedding matrix.
    #[default]
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributionSettings {
    pub steps: usize,
    pub tolerance: f64,
    pub baseline: BaselineMode,
    /// Scale each example's displayed scores to unit norm in the report.
    pub normalize: bool,
}

impl Default for AttributionSettings {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            tolerance: DEFAULT_TOLERANCE,
            baseline: BaselineMode::Zero,
            normalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsSettings {
    pub top_k: usize,
    pub frequency_mode: FrequencyMode,
    pub bin_width: f64,
    pub windows: Vec<[f64; 2]>,
    pub include_specials: bool,
    /// Examples rendered in the HTML report.
    pub report_examples: usize,
}

impl Default for AnalyticsSettings {
    fn default() -> Self {
        Self {
            top_k: 50,
            frequency_mode: FrequencyMode::default(),
            bin_width: DEFAULT_BIN_WIDTH,
            windows: vec![[0.10, 0.25], [-0.25, -0.10]],
            include_specials: false,
            report_examples: 50,
        }
    }
}

impl RunConfig {
    pub fn new(task: Task) -> Self {
        Self {
            task,
            output_dir: default_output_dir(),
            workers: 0,
            data: DataConfig::default(),
            synthetic: SyntheticConfig::default(),
            model: ModelSettings::default(),
            attribution: AttributionSettings::default(),
            analytics: AnalyticsSettings::default(),
        }
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn attribution_config(&self) -> AttributionConfig {
        AttributionConfig {
            steps: self.attribution.steps,
            tolerance: self.attribution.tolerance,
            normalize: self.attribution.normalize,
            workers: self.workers,
        }
    }

    /// Checks that task-specific fields are present, every referenced path
    /// exists and numeric settings are usable.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let task = self.task;
        if task != Task::Synthetic {
            let required = [
                ("data.train", &self.data.train),
                ("data.test", &self.data.test),
                ("data.vocab", &self.data.vocab),
            ];
            for (field, value) in required {
                if value.is_none() {
                    return Err(ConfigError::Missing { field, task });
                }
            }
        }
        let mut paths: Vec<(String, &PathBuf)> = [
            ("data.train", &self.data.train),
            ("data.test", &self.data.test),
            ("data.vocab", &self.data.vocab),
            ("data.stoplist", &self.data.stoplist),
            ("data.phrases", &self.data.phrases),
        ]
        .into_iter()
        .filter_map(|(f, p)| p.as_ref().map(|p| (f.to_string(), p)))
        .collect();
        for v in &self.data.extra_vocabs {
            paths.push((format!("data.extra_vocabs.{}", v.name), &v.path));
        }
        for (field, path) in paths {
            if !path.exists() {
                return Err(ConfigError::MissingPath {
                    field,
                    path: path.clone(),
                });
            }
        }
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if task == Task::Synthetic && (self.synthetic.train == 0 || self.synthetic.test == 0) {
            return invalid("synthetic.train and synthetic.test must be positive");
        }
        if self.data.max_tokens < 4 {
            return invalid("data.max_tokens must be at least 4");
        }
        if self.attribution.steps == 0 {
            return invalid("attribution.steps must be positive");
        }
        if !(self.attribution.tolerance >= 0.0) {
            return invalid("attribution.tolerance must be non-negative");
        }
        if !(self.analytics.bin_width > 0.0 && self.analytics.bin_width.is_finite()) {
            return invalid("analytics.bin_width must be positive");
        }
        for [lo, hi] in &self.analytics.windows {
            if !(lo <= hi) {
                return Err(ConfigError::Invalid(format!("analytics window [{lo}, {hi}] is empty")));
            }
        }
        self.model
            .model_config(TaskKind::Binary, 1, self.model.seed)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let doc: String = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start_matches(' '))
            .collect::<Vec<_>>()
            .join("\n");
        let c = RunConfig::from_toml(&doc, "doc").unwrap();
        assert_eq!(c.task, Task::Synthetic);
        assert_eq!(c.analytics.windows, vec![[0.10, 0.25], [-0.25, -0.10]]);
        assert_eq!(c.data.extra_vocabs[0].name, "legal");
        assert_eq!(c.model.optimizer, Optimizer::Adam);
        // Every default equals the documented value.
        let mut d = RunConfig::new(Task::Synthetic);
        d.output_dir = c.output_dir.clone();
        d.data = c.data.clone();
        assert_eq!(c, d);
    }

    #[test]
    fn minimal_and_unknown_keys() {
        let c = RunConfig::from_toml("task = \"synthetic\"", "t").unwrap();
        assert!(c.validate().is_ok());
        assert!(RunConfig::from_toml("task = \"synthetic\"\nsteps = 3", "t").is_err());
        assert!(RunConfig::from_toml("task = \"other\"", "t").is_err());
    }

    #[test]
    fn validation() {
        let c = RunConfig::new(Task::Overrule);
        assert!(matches!(c.validate(), Err(ConfigError::Missing { field: "data.train", .. })));
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("x.csv");
        std::fs::write(&f, "label,sentence\n").unwrap();
        let mut c = RunConfig::new(Task::Overrule);
        c.data.train = Some(f.clone());
        c.data.test = Some(f.clone());
        c.data.vocab = Some(dir.path().join("gone.txt"));
        assert!(matches!(c.validate(), Err(ConfigError::MissingPath { .. })));
        c.data.vocab = Some(f);
        assert!(c.validate().is_ok());
        c.analytics.windows.push([0.3, 0.1]);
        assert!(matches!(c.validate(), Err(ConfigError::Invalid(_))));
    }
}
