//! Stage orchestration: load → tokenize → train → evaluate → attribute →
//! analyze → report → manifest. Every output lands under the configured
//! output directory, and `manifest.json` lists each file with its SHA-256.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lexattr_core::analytics::{
    attribution_histogram, correctness_sets, distribution_stats, load_stoplist, model_token_coverage,
    scatter_export, stopword_split, token_frequencies, vocab_overlap, write_correctness, write_coverage,
    write_frequencies, write_histograms, write_partition, write_scatter, write_stats, CorrectnessMatrix,
    FrequencyTable, Window,
};
use lexattr_core::attribution::{attribute_dataset, write_records, RecordResult, ScoredRecord};
use lexattr_core::model::{
    evaluate, init_model, save_checkpoint, train, Classifier, EncodedExample, Evaluation, Example, TaskKind,
};
use lexattr_core::synthetic;
use lexattr_core::tokenizer::{
    build_queries, load_phrases, load_vocab, phrase_frequencies, tokenize, TokenizedText, Vocabulary,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, RunConfig, Task};
use crate::ingest::{ingest_casehold, ingest_overrule, IngestReport, Reject};
use crate::report::{render_report, ReportOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Tokenize,
    Train,
    Evaluate,
    Attribute,
    Analyze,
    Report,
    Manifest,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Tokenize => "tokenize",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Attribute => "attribute",
            Stage::Analyze => "analyze",
            Stage::Report => "report",
            Stage::Manifest => "manifest",
        })
    }
}

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration")]
    Config(#[from] ConfigError),
    #[error("stage {stage} failed")]
    Stage {
        stage: Stage,
        #[source]
        source: BoxError,
    },
}

impl PipelineError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Config(_) => None,
            PipelineError::Stage { stage, .. } => Some(*stage),
        }
    }
}

pub trait StageResult<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: Into<BoxError>> StageResult<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::Stage {
            stage,
            source: e.into(),
        })
    }
}

/// A labeled split and the rows that were rejected while reading it.
#[derive(Debug, Clone)]
pub struct Split {
    pub examples: Vec<Example>,
    pub rejects: Vec<Reject>,
}

impl From<IngestReport> for Split {
    fn from(r: IngestReport) -> Self {
        Split {
            examples: r.examples,
            rejects: r.rejects,
        }
    }
}

/// Everything read from disk (or generated) before tokenization.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub kind: TaskKind,
    pub vocab_name: String,
    pub vocab: Vocabulary,
    pub extra_vocabs: Vec<(String, Vocabulary)>,
    pub train: Split,
    pub test: Split,
    pub stoplist: Option<BTreeSet<String>>,
    pub phrases: Option<Vec<String>>,
}

pub fn load_inputs(config: &RunConfig) -> Result<Inputs, PipelineError> {
    config.validate()?;
    let stage = Stage::Load;
    let data = &config.data;
    let (kind, vocab_name, vocab, train, test) = match config.task {
        Task::Synthetic => {
            let s = &config.synthetic;
            let corpus = match s.kind {
                TaskKind::Binary => synthetic::binary_corpus(s.train, s.test, s.seed),
                TaskKind::MultipleChoice => synthetic::multiple_choice_corpus(s.train, s.test, s.seed),
            };
            let split = |examples| Split {
                examples,
                rejects: Vec::new(),
            };
            (s.kind, "synthetic".to_string(), corpus.vocab, split(corpus.train), split(corpus.test))
        }
        task => {
            let vocab_path = data.vocab.as_ref().expect("validated");
            let ingest = |p: &PathBuf| match task {
                Task::Overrule => ingest_overrule(p, data.strict),
                _ => ingest_casehold(p, data.strict),
            };
            let kind = if task == Task::Overrule {
                TaskKind::Binary
            } else {
                TaskKind::MultipleChoice
            };
            (
                kind,
                file_stem(vocab_path),
                load_vocab(vocab_path).at(stage)?,
                ingest(data.train.as_ref().expect("validated")).at(stage)?.into(),
                ingest(data.test.as_ref().expect("validated")).at(stage)?.into(),
            )
        }
    };
    let extra_vocabs = data
        .extra_vocabs
        .iter()
        .map(|v| Ok((v.name.clone(), load_vocab(&v.path).at(stage)?)))
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let stoplist = data.stoplist.as_ref().map(load_stoplist).transpose().at(stage)?;
    let phrases = data.phrases.as_ref().map(load_phrases).transpose().at(stage)?;
    Ok(Inputs {
        kind,
        vocab_name,
        vocab,
        extra_vocabs,
        train,
        test,
        stoplist,
        phrases,
    })
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Model inputs plus the raw texts tokenized one by one for corpus analytics.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub train: Vec<EncodedExample>,
    pub test: Vec<EncodedExample>,
    /// Every raw text (sentence, or context and each option) of both splits.
    pub texts: Vec<TokenizedText>,
}

pub fn encode_inputs(inputs: &Inputs, max_tokens: usize) -> Result<Encoded, PipelineError> {
    let encode = |xs: &[Example]| xs.iter().map(|e| e.encode(&inputs.vocab, max_tokens)).collect::<Vec<_>>();
    let (train, test) = (encode(&inputs.train.examples), encode(&inputs.test.examples));
    let stage = Stage::Tokenize;
    if train.is_empty() {
        return Err("training split has no examples").at(stage);
    }
    if test.is_empty() {
        return Err("test split has no examples").at(stage);
    }
    let texts = inputs
        .train
        .examples
        .iter()
        .chain(&inputs.test.examples)
        .flat_map(|e| e.texts())
        .map(|t| tokenize(t, &inputs.vocab, true))
        .collect();
    Ok(Encoded { train, test, texts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub name: String,
    pub seed: u64,
    pub accuracy: f64,
    pub f1: Option<f64>,
    pub confusion: Option<lexattr_core::model::Confusion>,
    pub loss_trace: Vec<f64>,
}

pub struct TrainedModel {
    pub name: String,
    pub seed: u64,
    pub model: Classifier,
    pub loss_trace: Vec<f64>,
}

pub fn model_name(seed: u64) -> String {
    format!("seed{seed}")
}

pub fn train_model(
    config: &RunConfig,
    inputs: &Inputs,
    encoded: &Encoded,
    seed: u64,
) -> Result<TrainedModel, PipelineError> {
    let mc = config.model.model_config(inputs.kind, inputs.vocab.len(), seed);
    let model = init_model(&mc).at(Stage::Train)?;
    let out = train(&model, &encoded.train, &mc).at(Stage::Train)?;
    Ok(TrainedModel {
        name: model_name(seed),
        seed,
        model: out.model,
        loss_trace: out.loss_trace,
    })
}

/// `example_id  label  predicted_class  prediction_probability  correct  probabilities`
pub fn write_predictions(eval: &Evaluation, test: &[EncodedExample], out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    w.write_record(["example_id", "label", "predicted_class", "prediction_probability", "correct", "probabilities"])?;
    for (p, ex) in eval.predictions.iter().zip(test) {
        let probs: Vec<String> = p.probabilities.iter().map(f64::to_string).collect();
        w.write_record([
            ex.id.clone(),
            ex.label.to_string(),
            p.predicted_class.to_string(),
            p.probability().to_string(),
            (p.predicted_class == ex.label).to_string(),
            probs.join(" "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Attributes the test split and returns records in example order.
pub fn attribute_split(
    config: &RunConfig,
    model: &Classifier,
    test: &[EncodedExample],
) -> Result<Vec<RecordResult>, PipelineError> {
    let out = attribute_dataset(model, test, &config.attribution_config()).at(Stage::Attribute)?;
    Ok(out.into_iter().map(|r| r.map(|a| a.scored)).collect())
}

pub fn write_record_files(records: &[RecordResult], records_path: &Path, tokens_path: &Path) -> Result<(), BoxError> {
    write_records(records, create(records_path)?, create(tokens_path)?)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, std::io::Error> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionSummary {
    pub steps: usize,
    pub tolerance: f64,
    pub records: usize,
    pub failures: usize,
    pub max_gap: f64,
    pub mean_gap: f64,
    pub over_tolerance: usize,
}

impl AttributionSummary {
    pub fn new(config: &RunConfig, records: &[RecordResult]) -> Self {
        let ok: Vec<&ScoredRecord> = records.iter().filter_map(|r| r.as_ref().ok()).collect();
        let gaps: Vec<f64> = ok.iter().map(|r| r.completeness_gap).collect();
        Self {
            steps: config.attribution.steps,
            tolerance: config.attribution.tolerance,
            records: ok.len(),
            failures: records.len() - ok.len(),
            max_gap: gaps.iter().copied().fold(0.0, f64::max),
            mean_gap: if gaps.is_empty() { 0.0 } else { gaps.iter().sum::<f64>() / gaps.len() as f64 },
            over_tolerance: gaps.iter().filter(|g| **g > config.attribution.tolerance).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub rows: usize,
    pub examples: usize,
    pub rejects: usize,
}

impl SplitSizes {
    fn of(s: &Split) -> Self {
        Self {
            rows: s.examples.len() + s.rejects.len(),
            examples: s.examples.len(),
            rejects: s.rejects.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub task: Task,
    pub kind: TaskKind,
    pub train: SplitSizes,
    pub test: SplitSizes,
    /// Primary model first, then ensemble members.
    pub models: Vec<ModelMetrics>,
    pub attribution: AttributionSummary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub generated_at: u64,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Manifest {
    /// Hashes every file under `dir` except the manifest itself.
    pub fn build(dir: &Path) -> Result<Self, std::io::Error> {
        let mut files = Vec::new();
        collect_files(dir, dir, &mut files)?;
        files.sort_by(|a, b| a.path.cmp(&b.path));
        let generated_at = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Ok(Self { generated_at, files })
    }

    pub fn load(path: &Path) -> Result<Self, BoxError> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

pub fn sha256_file(path: &Path) -> Result<String, std::io::Error> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<ManifestEntry>) -> Result<(), std::io::Error> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
            continue;
        }
        let rel = path.strip_prefix(root).expect("under root");
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        if rel == MANIFEST_FILE {
            continue;
        }
        out.push(ManifestEntry {
            bytes: fs::metadata(&path)?.len(),
            sha256: sha256_file(&path)?,
            path: rel,
        });
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), BoxError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn write_rejects(inputs: &Inputs, path: &Path) -> Result<(), BoxError> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(create(path)?);
    w.write_record(["split", "line", "error"])?;
    for (split, s) in [("train", &inputs.train), ("test", &inputs.test)] {
        for r in &s.rejects {
            w.write_record([split.to_string(), r.line().to_string(), r.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// File name for a histogram window, e.g. `histogram_0.1_0.25.tsv`.
pub fn window_file_name(lo: f64, hi: f64) -> String {
    format!("histogram_{lo}_{hi}.tsv")
}

fn analyze(
    config: &RunConfig,
    inputs: &Inputs,
    encoded: &Encoded,
    models: &[(String, Vec<RecordResult>)],
    evals: &[(String, Evaluation)],
    out: &Path,
) -> Result<(), BoxError> {
    let a = &config.analytics;
    let table = token_frequencies(&encoded.texts, a.frequency_mode)?;
    write_frequencies(&table.top_k(a.top_k), create(&out.join("frequencies.tsv"))?)?;
    if let Some(stop) = &inputs.stoplist {
        let split = stopword_split(table.counts.keys().map(String::as_str), stop);
        let content = FrequencyTable {
            total: split.content.iter().map(|t| table.count(t)).sum(),
            counts: split.content.iter().map(|t| (t.clone(), table.count(t))).collect(),
        };
        write_frequencies(&content.top_k(a.top_k), create(&out.join("frequencies_content.tsv"))?)?;
    }

    let mut vocabs: Vec<(&str, &Vocabulary)> = vec![(inputs.vocab_name.as_str(), &inputs.vocab)];
    vocabs.extend(inputs.extra_vocabs.iter().map(|(n, v)| (n.as_str(), v)));
    write_coverage(&model_token_coverage(&table, a.top_k, &vocabs)?, create(&out.join("coverage.tsv"))?)?;
    if vocabs.len() >= 2 {
        write_partition(&vocab_overlap(&vocabs)?, create(&out.join("vocab_overlap.tsv"))?)?;
    }

    if let Some(phrases) = &inputs.phrases {
        let counts = phrase_frequencies(&encoded.texts, &build_queries(phrases, &inputs.vocab)?)?;
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(create(&out.join("phrases.tsv"))?);
        w.write_record(["phrase", "token_len", "degraded", "occurrences", "texts"])?;
        for c in counts {
            w.write_record([
                c.label,
                c.token_len.to_string(),
                c.degraded.to_string(),
                c.occurrences.to_string(),
                c.examples.to_string(),
            ])?;
        }
        w.flush()?;
    }

    let scored: Vec<(String, Vec<ScoredRecord>)> = models
        .iter()
        .map(|(name, rs)| (name.clone(), rs.iter().filter_map(|r| r.as_ref().ok().cloned()).collect()))
        .collect();
    let primary = &scored[0].1;
    let hist = attribution_histogram(primary, a.bin_width, None, a.include_specials)?;
    write_histograms(
        std::iter::once(("", &hist.overall)).chain(hist.per_token.iter().map(|(t, h)| (t.as_str(), h))),
        create(&out.join("histogram.tsv"))?,
    )?;
    for [lo, hi] in &a.windows {
        let h = attribution_histogram(primary, a.bin_width, Some(Window::new(*lo, *hi)?), a.include_specials)?;
        write_histograms(
            std::iter::once(("", &h.overall)).chain(h.per_token.iter().map(|(t, h)| (t.as_str(), h))),
            create(&out.join(window_file_name(*lo, *hi)))?,
        )?;
    }

    let groups: Vec<(&str, &[ScoredRecord])> = scored
        .iter()
        .filter(|(_, rs)| !rs.is_empty())
        .map(|(n, rs)| (n.as_str(), rs.as_slice()))
        .collect();
    write_stats(&distribution_stats(&groups)?, create(&out.join("distribution_stats.tsv"))?)?;
    write_scatter(&scatter_export(primary), create(&out.join("scatter.tsv"))?)?;

    let columns = evals
        .iter()
        .map(|(name, e)| (name.clone(), e.predictions.iter().map(|p| p.correct == Some(true)).collect()))
        .collect();
    write_correctness(&correctness_sets(&CorrectnessMatrix::from_columns(columns)?), create(&out.join("correctness.tsv"))?)?;
    Ok(())
}

/// Runs every stage and returns the manifest it wrote.
pub fn run_pipeline(config: &RunConfig) -> Result<Manifest, PipelineError> {
    let inputs = load_inputs(config)?;
    let out = config.output_dir.as_path();
    fs::create_dir_all(out).at(Stage::Load)?;
    write_rejects(&inputs, &out.join("rejects.tsv")).at(Stage::Load)?;

    let encoded = encode_inputs(&inputs, config.data.max_tokens)?;

    let mut seeds = vec![config.model.seed];
    seeds.extend(config.model.ensemble_seeds.iter().filter(|s| **s != config.model.seed));
    let mut trained = Vec::new();
    for &seed in &seeds {
        trained.push(train_model(config, &inputs, &encoded, seed)?);
    }
    save_checkpoint(&trained[0].model, out.join("model.ckpt")).at(Stage::Train)?;
    for t in &trained[1..] {
        save_checkpoint(&t.model, out.join(format!("model_{}.ckpt", t.name))).at(Stage::Train)?;
    }

    let mut evals = Vec::new();
    let mut model_metrics = Vec::new();
    for t in &trained {
        let e = evaluate(&t.model, &encoded.test).at(Stage::Evaluate)?;
        model_metrics.push(ModelMetrics {
            name: t.name.clone(),
            seed: t.seed,
            accuracy: e.accuracy,
            f1: e.f1,
            confusion: e.confusion,
            loss_trace: t.loss_trace.clone(),
        });
        evals.push((t.name.clone(), e));
    }
    write_predictions(&evals[0].1, &encoded.test, create(&out.join("predictions.tsv")).at(Stage::Evaluate)?)
        .at(Stage::Evaluate)?;

    let mut records = Vec::new();
    for (i, t) in trained.iter().enumerate() {
        let rs = attribute_split(config, &t.model, &encoded.test)?;
        let (r, k) = if i == 0 {
            ("attributions.tsv".to_string(), "attribution_tokens.tsv".to_string())
        } else {
            (format!("attributions_{}.tsv", t.name), format!("attribution_tokens_{}.tsv", t.name))
        };
        write_record_files(&rs, &out.join(r), &out.join(k)).at(Stage::Attribute)?;
        records.push((t.name.clone(), rs));
    }
    let metrics = Metrics {
        task: config.task,
        kind: inputs.kind,
        train: SplitSizes::of(&inputs.train),
        test: SplitSizes::of(&inputs.test),
        models: model_metrics,
        attribution: AttributionSummary::new(config, &records[0].1),
    };
    write_json(&out.join("metrics.json"), &metrics).at(Stage::Evaluate)?;

    analyze(config, &inputs, &encoded, &records, &evals, out).at(Stage::Analyze)?;

    let shown: Vec<ScoredRecord> = records[0]
        .1
        .iter()
        .filter_map(|r| r.as_ref().ok().cloned())
        .take(config.analytics.report_examples)
        .collect();
    let options = ReportOptions {
        title: format!("Token attributions: {} task, model {}", config.task, trained[0].name),
        normalize: config.attribution.normalize,
    };
    fs::write(out.join("report.html"), render_report(&shown, &options)).at(Stage::Report)?;

    let manifest = Manifest::build(out).at(Stage::Manifest)?;
    write_json(&out.join(MANIFEST_FILE), &manifest).at(Stage::Manifest)?;
    Ok(manifest)
}
