use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lexattr_cli::config::{ConfigError, NamedPath, RunConfig, Task};
use lexattr_cli::pipeline::{
    attribute_split, encode_inputs, load_inputs, run_pipeline, train_model, window_file_name, write_predictions,
    write_record_files, AttributionSummary, PipelineError, Stage, StageResult,
};
use lexattr_cli::report::{render_report, ReportOptions};
use lexattr_core::analytics::{
    attribution_histogram, distribution_stats, scatter_export, stopword_split, token_frequencies, vocab_overlap,
    write_frequencies, write_histograms, write_partition, write_scatter, write_stats, FrequencyMode, FrequencyTable,
    Window, DEFAULT_BIN_WIDTH,
};
use lexattr_core::attribution::{read_records, ScoredRecord};
use lexattr_core::model::{evaluate, load_checkpoint, save_checkpoint, Optimizer, TaskKind};
use lexattr_core::tokenizer::{build_queries, load_vocab, merge_broken_words, phrase_search, tokenize};

#[derive(Parser)]
#[command(name = "lexattr", version, about = "Token attribution analysis for legal-text classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// WordPiece-tokenize text (arguments, or stdin lines when none are given)
    Tokenize {
        #[arg(long)]
        vocab: PathBuf,
        /// Omit [CLS] and [SEP]
        #[arg(long)]
        no_specials: bool,
        /// Also print the merged words
        #[arg(long)]
        merge: bool,
        text: Vec<String>,
    },
    /// Sizes and overlap partition of two or more vocabularies
    VocabAnalyze {
        /// NAME=PATH, repeated
        #[arg(long = "vocab", value_parser = parse_named, required = true)]
        vocabs: Vec<NamedPath>,
    },
    /// Most frequent tokens of the configured dataset
    Freq {
        #[command(flatten)]
        run: RunArgs,
        /// Drop stop words (needs a stoplist)
        #[arg(long)]
        content_only: bool,
    },
    /// Phrase-list occurrence counts over the configured dataset
    Phrases {
        #[command(flatten)]
        run: RunArgs,
        /// Print every hit instead of per-phrase totals
        #[arg(long)]
        hits: bool,
    },
    /// Train the primary model and write <output_dir>/model.ckpt
    Train {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate a checkpoint on the test split
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// Defaults to <output_dir>/model.ckpt
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Integrated-gradients attribution of the test split
    Attribute {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Histograms, distribution statistics and scatter export from record files
    Analyze {
        #[command(flatten)]
        records: RecordFiles,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
        bin_width: f64,
        /// LO,HI score window, repeated
        #[arg(long = "window", value_parser = parse_window)]
        windows: Vec<[f64; 2]>,
        #[arg(long)]
        include_specials: bool,
        /// Model name used in the statistics table
        #[arg(long, default_value = "model")]
        name: String,
    },
    /// Render record files as an HTML page
    Report {
        #[command(flatten)]
        records: RecordFiles,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        normalize: bool,
        /// Render at most this many examples
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        title: Option<String>,
    },
    /// Run every stage and write a manifest
    Pipeline {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RecordFiles {
    /// Record table written by `attribute`
    #[arg(long)]
    records: PathBuf,
    /// Token sidecar written by `attribute`
    #[arg(long)]
    tokens: PathBuf,
}

/// Flags mirroring the run configuration; each overrides the file value.
#[derive(Args, Default)]
struct RunArgs {
    /// TOML run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// NAME=PATH, repeated; replaces the configured list
    #[arg(long = "extra-vocab", value_parser = parse_named)]
    extra_vocabs: Vec<NamedPath>,
    #[arg(long)]
    stoplist: Option<PathBuf>,
    #[arg(long)]
    phrases: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    max_tokens: Option<usize>,
    /// binary or multiple_choice
    #[arg(long, value_parser = parse_kind)]
    synthetic_kind: Option<TaskKind>,
    #[arg(long)]
    synthetic_train: Option<usize>,
    #[arg(long)]
    synthetic_test: Option<usize>,
    #[arg(long)]
    synthetic_seed: Option<u64>,
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// adam or sgd
    #[arg(long, value_parser = parse_optimizer)]
    optimizer: Option<Optimizer>,
    /// Repeated; replaces the configured list
    #[arg(long = "ensemble-seed")]
    ensemble_seeds: Vec<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    top_k: Option<usize>,
    /// merged-word or token
    #[arg(long, value_parser = parse_mode)]
    frequency_mode: Option<FrequencyMode>,
    #[arg(long)]
    bin_width: Option<f64>,
    /// LO,HI, repeated; replaces the configured windows
    #[arg(long = "window", value_parser = parse_window)]
    windows: Vec<[f64; 2]>,
    #[arg(long)]
    report_examples: Option<usize>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig, ConfigError> {
        let mut c = match (&self.config, self.task) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(task)) => RunConfig::new(task),
            (None, None) => return Err(ConfigError::Invalid("either --config or --task is required".into())),
        };
        set(&mut c.task, self.task);
        set(&mut c.output_dir, self.output_dir);
        set(&mut c.workers, self.workers);
        let d = &mut c.data;
        d.train = self.train.or(d.train.take());
        d.test = self.test.or(d.test.take());
        d.vocab = self.vocab.or(d.vocab.take());
        d.stoplist = self.stoplist.or(d.stoplist.take());
        d.phrases = self.phrases.or(d.phrases.take());
        if !self.extra_vocabs.is_empty() {
            d.extra_vocabs = self.extra_vocabs;
        }
        d.strict |= self.strict;
        set(&mut d.max_tokens, self.max_tokens);
        let s = &mut c.synthetic;
        set(&mut s.kind, self.synthetic_kind);
        set(&mut s.train, self.synthetic_train);
        set(&mut s.test, self.synthetic_test);
        set(&mut s.seed, self.synthetic_seed);
        let m = &mut c.model;
        set(&mut m.embed_dim, self.embed_dim);
        set(&mut m.hidden_dim, self.hidden_dim);
        set(&mut m.seed, self.seed);
        set(&mut m.learning_rate, self.learning_rate);
        set(&mut m.epochs, self.epochs);
        set(&mut m.batch_size, self.batch_size);
        set(&mut m.optimizer, self.optimizer);
        if !self.ensemble_seeds.is_empty() {
            m.ensemble_seeds = self.ensemble_seeds;
        }
        set(&mut c.attribution.steps, self.steps);
        set(&mut c.attribution.tolerance, self.tolerance);
        c.attribution.normalize |= self.normalize;
        let a = &mut c.analytics;
        set(&mut a.top_k, self.top_k);
        set(&mut a.frequency_mode, self.frequency_mode);
        set(&mut a.bin_width, self.bin_width);
        if !self.windows.is_empty() {
            a.windows = self.windows;
        }
        set(&mut a.report_examples, self.report_examples);
        c.validate()?;
        Ok(c)
    }
}

fn parse_named(s: &str) -> Result<NamedPath, String> {
    let (name, path) = s.split_once('=').ok_or_else(|| format!("expected NAME=PATH, got {s:?}"))?;
    Ok(NamedPath {
        name: name.to_string(),
        path: PathBuf::from(path),
    })
}

fn parse_window(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got {s:?}"))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok([num(lo)?, num(hi)?])
}

fn parse_kind(s: &str) -> Result<TaskKind, String> {
    match s {
        "binary" => Ok(TaskKind::Binary),
        "multiple_choice" | "multiple-choice" => Ok(TaskKind::MultipleChoice),
        _ => Err(format!("unknown kind {s:?} (binary, multiple_choice)")),
    }
}

fn parse_optimizer(s: &str) -> Result<Optimizer, String> {
    match s {
        "adam" => Ok(Optimizer::Adam),
        "sgd" => Ok(Optimizer::Sgd),
        _ => Err(format!("unknown optimizer {s:?} (adam, sgd)")),
    }
}

fn parse_mode(s: &str) -> Result<FrequencyMode, String> {
    match s {
        "merged-word" => Ok(FrequencyMode::MergedWord),
        "token" => Ok(FrequencyMode::Token),
        _ => Err(format!("unknown frequency mode {s:?} (merged-word, token)")),
    }
}

fn require(field: &str, path: &Path) -> Result<(), ConfigError> {
    if path.exists() {
        Ok(())
    } else {
        Err(ConfigError::MissingPath {
            field: field.to_string(),
            path: path.to_path_buf(),
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn load_record_files(files: &RecordFiles) -> Result<Vec<ScoredRecord>> {
    require("--records", &files.records)?;
    require("--tokens", &files.tokens)?;
    let open = |p: &Path| -> Result<BufReader<File>> {
        Ok(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?))
    };
    let records = read_records(open(&files.records)?, open(&files.tokens)?)
        .with_context(|| format!("reading {}", files.records.display()))?;
    Ok(records.into_iter().filter_map(Result::ok).collect())
}

fn checkpoint_path(config: &RunConfig, given: Option<PathBuf>) -> Result<PathBuf, ConfigError> {
    let path = given.unwrap_or_else(|| config.output_dir.join("model.ckpt"));
    require("--checkpoint", &path)?;
    Ok(path)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Tokenize {
            vocab,
            no_specials,
            merge,
            text,
        } => {
            require("--vocab", &vocab)?;
            let v = load_vocab(&vocab)?;
            let texts = if text.is_empty() {
                let mut s = String::new();
                io::stdin().read_to_string(&mut s)?;
                s.lines().map(String::from).collect()
            } else {
                text
            };
            let mut out = io::stdout().lock();
            for t in &texts {
                let tok = tokenize(t, &v, !no_specials);
                let ids: Vec<String> = tok.token_ids.iter().map(u32::to_string).collect();
                writeln!(out, "{}\t{}", ids.join(" "), tok.token_strings.join(" "))?;
                if merge {
                    let words: Vec<String> = merge_broken_words(&tok)?.into_iter().map(|w| w.word).collect();
                    writeln!(out, "\t{}", words.join(" "))?;
                }
            }
        }
        Command::VocabAnalyze { vocabs } => {
            for v in &vocabs {
                require(&format!("--vocab {}", v.name), &v.path)?;
            }
            let loaded = vocabs
                .iter()
                .map(|v| Ok((v.name.as_str(), load_vocab(&v.path)?)))
                .collect::<Result<Vec<_>>>()?;
            let mut out = io::stdout().lock();
            writeln!(out, "vocab\tsize")?;
            for (name, v) in &loaded {
                writeln!(out, "{name}\t{}", v.len())?;
            }
            if loaded.len() >= 2 {
                let refs: Vec<_> = loaded.iter().map(|(n, v)| (*n, v)).collect();
                writeln!(out)?;
                write_partition(&vocab_overlap(&refs)?, &mut out)?;
            }
        }
        Command::Freq { run, content_only } => {
            let config = run.resolve()?;
            let inputs = load_inputs(&config)?;
            let encoded = encode_inputs(&inputs, config.data.max_tokens)?;
            let mut table = token_frequencies(&encoded.texts, config.analytics.frequency_mode)?;
            if content_only {
                let Some(stop) = &inputs.stoplist else {
                    return Err(ConfigError::Invalid("--content-only needs a stoplist".into()).into());
                };
                let split = stopword_split(table.counts.keys().map(String::as_str), stop);
                table = FrequencyTable {
                    total: split.content.iter().map(|t| table.count(t)).sum(),
                    counts: split.content.iter().map(|t| (t.clone(), table.count(t))).collect(),
                };
            }
            write_frequencies(&table.top_k(config.analytics.top_k), io::stdout().lock())?;
        }
        Command::Phrases { run, hits } => {
            let config = run.resolve()?;
            if config.data.phrases.is_none() {
                return Err(ConfigError::Invalid("a phrase list (--phrases) is required".into()).into());
            }
            let inputs = load_inputs(&config)?;
            let encoded = encode_inputs(&inputs, config.data.max_tokens)?;
            let queries = build_queries(inputs.phrases.as_deref().unwrap_or_default(), &inputs.vocab)?;
            let mut out = io::stdout().lock();
            if hits {
                writeln!(out, "phrase\ttext\toffset")?;
                for q in &queries {
                    for h in phrase_search(&encoded.texts, q)? {
                        writeln!(out, "{}\t{}\t{}", q.label, h.example, h.offset)?;
                    }
                }
            } else {
                writeln!(out, "phrase\ttoken_len\tdegraded\toccurrences\ttexts")?;
                for c in lexattr_core::tokenizer::phrase_frequencies(&encoded.texts, &queries)? {
                    writeln!(out, "{}\t{}\t{}\t{}\t{}", c.label, c.token_len, c.degraded, c.occurrences, c.examples)?;
                }
            }
        }
        Command::Train { run } => {
            let config = run.resolve()?;
            let inputs = load_inputs(&config)?;
            let encoded = encode_inputs(&inputs, config.data.max_tokens)?;
            let trained = train_model(&config, &inputs, &encoded, config.model.seed)?;
            fs::create_dir_all(&config.output_dir).at(Stage::Train)?;
            let path = config.output_dir.join("model.ckpt");
            save_checkpoint(&trained.model, &path).at(Stage::Train)?;
            for (epoch, loss) in trained.loss_trace.iter().enumerate() {
                println!("epoch {}\tloss {loss:.6}", epoch + 1);
            }
            println!("wrote {}", path.display());
        }
        Command::Eval { run, checkpoint } => {
            let config = run.resolve()?;
            let ckpt = checkpoint_path(&config, checkpoint)?;
            let inputs = load_inputs(&config)?;
            let encoded = encode_inputs(&inputs, config.data.max_tokens)?;
            let model = load_checkpoint(&ckpt).at(Stage::Evaluate)?;
            let eval = evaluate(&model, &encoded.test).at(Stage::Evaluate)?;
            fs::create_dir_all(&config.output_dir).at(Stage::Evaluate)?;
            let path = config.output_dir.join("predictions.tsv");
            write_predictions(&eval, &encoded.test, create(&path)?).at(Stage::Evaluate)?;
            let summary = serde_json::json!({
                "test_examples": encoded.test.len(),
                "test_rejects": inputs.test.rejects.len(),
                "accuracy": eval.accuracy,
                "f1": eval.f1,
                "confusion": eval.confusion,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Attribute { run, checkpoint } => {
            let config = run.resolve()?;
            let ckpt = checkpoint_path(&config, checkpoint)?;
            let inputs = load_inputs(&config)?;
            let encoded = encode_inputs(&inputs, config.data.max_tokens)?;
            let model = load_checkpoint(&ckpt).at(Stage::Attribute)?;
            let records = attribute_split(&config, &model, &encoded.test)?;
            fs::create_dir_all(&config.output_dir).at(Stage::Attribute)?;
            write_record_files(
                &records,
                &config.output_dir.join("attributions.tsv"),
                &config.output_dir.join("attribution_tokens.tsv"),
            )
            .at(Stage::Attribute)?;
            println!("{}", serde_json::to_string_pretty(&AttributionSummary::new(&config, &records))?);
        }
        Command::Analyze {
            records,
            out,
            bin_width,
            windows,
            include_specials,
            name,
        } => {
            let records = load_record_files(&records)?;
            let windows = windows
                .iter()
                .map(|[lo, hi]| Window::new(*lo, *hi))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            if records.is_empty() {
                bail!("no successful records to analyze");
            }
            fs::create_dir_all(&out)?;
            let ranges = std::iter::once(None).chain(windows.into_iter().map(Some));
            for range in ranges {
                let h = attribution_histogram(&records, bin_width, range, include_specials)?;
                let file = match range {
                    None => "histogram.tsv".to_string(),
                    Some(w) => window_file_name(w.lo, w.hi),
                };
                write_histograms(
                    std::iter::once(("", &h.overall)).chain(h.per_token.iter().map(|(t, h)| (t.as_str(), h))),
                    create(&out.join(file))?,
                )?;
            }
            write_stats(
                &distribution_stats(&[(name.as_str(), records.as_slice())])?,
                create(&out.join("distribution_stats.tsv"))?,
            )?;
            write_scatter(&scatter_export(&records), create(&out.join("scatter.tsv"))?)?;
            println!("analyzed {} records into {}", records.len(), out.display());
        }
        Command::Report {
            records,
            out,
            normalize,
            limit,
            title,
        } => {
            let mut records = load_record_files(&records)?;
            if let Some(n) = limit {
                records.truncate(n);
            }
            let mut options = ReportOptions {
                normalize,
                ..ReportOptions::default()
            };
            set(&mut options.title, title);
            fs::write(&out, render_report(&records, &options)).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} blocks to {}", records.len(), out.display());
        }
        Command::Pipeline { run } => {
            let config = run.resolve()?;
            let manifest = run_pipeline(&config)?;
            for f in &manifest.files {
                println!("{}\t{}\t{}", f.sha256, f.bytes, f.path);
            }
            println!("manifest: {}", config.output_dir.join("manifest.json").display());
        }
    }
    Ok(())
}

/// 1 for configuration and argument problems, 2 for failures inside a stage.
fn exit_code(e: &anyhow::Error) -> u8 {
    let validation = e.downcast_ref::<ConfigError>().is_some()
        || matches!(e.downcast_ref::<PipelineError>(), Some(PipelineError::Config(_)));
    if validation {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
