//! Command-line pipelines: train an n-gram model, generate with a decoding
//! strategy, evaluate generations, and profile ε on text.
//!
//! Exit codes: 0 on success, 2 for usage or input errors, 1 for internal
//! failures.

pub mod files;
pub mod records;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use typical_core::metrics::{self, TextSequence};
use typical_core::ngram::EOS;
use typical_core::{batch_generate, tokenize, NGramModel, StrategyConfig, TokenId, TrainConfig};

use files::{read_bytes, read_text, write_atomic, RunManifest};
use records::{parse_jsonl, to_jsonl, GenerationLine};

/// Top-k size used when `--k` is omitted.
pub const DEFAULT_K: usize = 30;
/// Nucleus mass used when `--n` is omitted.
pub const DEFAULT_N: f64 = 0.95;
/// Typical mass used when `--tau` is omitted.
pub const DEFAULT_TAU: f64 = 0.95;
pub const DEFAULT_TEMPERATURE: f64 = 1.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<typical_core::Error> for CliError {
    fn from(e: typical_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "typical", version, about = "Truncated sampling over n-gram language models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an n-gram model on a corpus with one document per line
    Train(TrainArgs),
    /// Generate continuations with one decoding strategy
    Generate(GenerateArgs),
    /// Compute automatic metrics for a generations file
    Evaluate(EvaluateArgs),
    /// Histogram of per-token ε for a text under a model
    Epsilon(EpsilonArgs),
    /// Generate and evaluate several strategies into one table
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    /// Comma-separated interpolation weights, unigram first
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.01)]
    pub floor: f64,
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    /// Keep letter case instead of lowercasing
    #[arg(long)]
    pub keep_case: bool,
    /// Held-out text for a perplexity report
    #[arg(long)]
    pub validation: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyName {
    Greedy,
    Ancestral,
    Temperature,
    Topk,
    Nucleus,
    Typical,
}

#[derive(Debug, Clone, Args)]
pub struct StrategyArgs {
    #[arg(long, value_enum)]
    pub strategy: StrategyName,
    /// Top-k size (default 30)
    #[arg(long)]
    pub k: Option<usize>,
    /// Nucleus mass (default 0.95)
    #[arg(long)]
    pub n: Option<f64>,
    /// Typical mass (default 0.95)
    #[arg(long)]
    pub tau: Option<f64>,
    /// Sampling temperature
    #[arg(long)]
    pub temperature: Option<f64>,
}

impl StrategyArgs {
    /// Resolves the strategy. Flags belonging to another strategy are an
    /// error; a missing parameter falls back to its default with a notice.
    pub fn resolve(&self) -> Result<(StrategyConfig, Vec<String>), CliError> {
        let given = [
            ("--k", self.k.is_some(), StrategyName::Topk),
            ("--n", self.n.is_some(), StrategyName::Nucleus),
            ("--tau", self.tau.is_some(), StrategyName::Typical),
            ("--temperature", self.temperature.is_some(), StrategyName::Temperature),
        ];
        for (flag, present, owner) in given {
            if present && owner != self.strategy {
                return Err(CliError::Input(format!(
                    "{flag} does not apply to strategy {:?}",
                    self.strategy
                )));
            }
        }
        let mut notes = Vec::new();
        let mut pick = |v: Option<f64>, default: f64, flag: &str| {
            v.unwrap_or_else(|| {
                notes.push(format!("{flag} not given, using {default}"));
                default
            })
        };
        let cfg = match self.strategy {
            StrategyName::Greedy => StrategyConfig::Greedy,
            StrategyName::Ancestral => StrategyConfig::Ancestral,
            StrategyName::Temperature => StrategyConfig::Temperature {
                t: pick(self.temperature, DEFAULT_TEMPERATURE, "--temperature"),
            },
            StrategyName::Topk => StrategyConfig::TopK {
                k: pick(self.k.map(|k| k as f64), DEFAULT_K as f64, "--k") as usize,
            },
            StrategyName::Nucleus => StrategyConfig::Nucleus {
                n: pick(self.n, DEFAULT_N, "--n"),
            },
            StrategyName::Typical => StrategyConfig::Typical {
                tau: pick(self.tau, DEFAULT_TAU, "--tau"),
            },
        };
        cfg.validate()?;
        Ok((cfg, notes))
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    /// Literal prompt text
    #[arg(long, conflicts_with = "prompts")]
    pub prompt: Option<String>,
    /// File with one prompt per line, used in rotation
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    /// Number of records to generate
    #[arg(long, default_value_t = 1)]
    pub num: usize,
    /// Maximum generated tokens per record
    #[arg(long)]
    pub max_len: usize,
    /// Record i uses seed + i
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub generations: PathBuf,
    /// Model that generated the text
    #[arg(long)]
    pub model_g: PathBuf,
    /// Independent model
    #[arg(long)]
    pub model_i: PathBuf,
    /// Reference text, one document per line; adds a reference report and deltas
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EpsilonArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Text, one document per line
    #[arg(long)]
    pub text: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub model_g: PathBuf,
    #[arg(long)]
    pub model_i: PathBuf,
    /// Comma-separated list such as `typical:0.95,nucleus:0.95,topk:30,temperature:1.0,greedy`
    #[arg(long, value_delimiter = ',')]
    pub strategies: Vec<String>,
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub num: usize,
    #[arg(long)]
    pub max_len: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Epsilon(a) => cmd_epsilon(&a),
        Command::Compare(a) => cmd_compare(&a),
    }
}

fn load_model(path: &Path, manifest: &mut RunManifest) -> Result<NGramModel, CliError> {
    let bytes = read_bytes(path)?;
    manifest.add_input(path, &bytes);
    NGramModel::from_bytes(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Non-blank lines of a text file.
fn read_lines(path: &Path, manifest: &mut RunManifest) -> Result<Vec<String>, CliError> {
    let text = read_text(path)?;
    manifest.add_input(path, text.as_bytes());
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_owned)
        .collect())
}

/// Each line tokenized with the model's casing, EOS appended.
fn encode_documents(model: &NGramModel, lines: &[String]) -> Vec<Vec<TokenId>> {
    lines
        .iter()
        .map(|l| {
            let mut ids = model.encode_text(l);
            ids.push(EOS);
            ids
        })
        .collect()
}

pub fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    let lambdas = match (&a.lambdas, a.order) {
        (Some(l), _) => l.clone(),
        (None, 3) => TrainConfig::default().lambdas,
        (None, m) => {
            return Err(CliError::Input(format!("--lambdas is required for order {m}")));
        }
    };
    let config = TrainConfig {
        order: a.order,
        lambdas,
        floor: a.floor,
        min_count: a.min_count,
        lowercase: !a.keep_case,
    };
    config.validate()?;

    let mut manifest = RunManifest::new(
        "train",
        json!({
            "order": config.order,
            "lambdas": config.lambdas,
            "floor": config.floor,
            "min_count": config.min_count,
            "lowercase": config.lowercase,
            "corpus": a.corpus.display().to_string(),
            "validation": a.validation.as_ref().map(|p| p.display().to_string()),
            "out": a.out.display().to_string(),
        }),
    );
    let text = read_text(&a.corpus)?;
    manifest.add_input(&a.corpus, text.as_bytes());
    let model = NGramModel::train(text.lines(), config)?;

    println!("tokens: {}", model.total_tokens());
    println!("types: {}", model.vocab().len());
    if let Some(v) = &a.validation {
        let lines = read_lines(v, &mut manifest)?;
        let docs = encode_documents(&model, &lines);
        let mut info = 0.0;
        let mut n = 0;
        for d in &docs {
            info += typical_core::sequence_information(&model, d)?;
            n += d.len();
        }
        if n == 0 {
            return Err(CliError::Input("validation file has no text".into()));
        }
        println!("validation perplexity: {:.6}", (info / n as f64).exp());
    }

    write_atomic(&a.out, &model.to_bytes())?;
    manifest.write_for(&a.out)
}

fn prompt_lines(a: &GenerateArgs, manifest: &mut RunManifest) -> Result<Vec<String>, CliError> {
    if let Some(p) = &a.prompt {
        return Ok(vec![p.clone()]);
    }
    if let Some(path) = &a.prompts {
        let lines = read_lines(path, manifest)?;
        if lines.is_empty() {
            return Err(CliError::Input(format!("{} has no prompts", path.display())));
        }
        return Ok(lines);
    }
    Ok(vec![String::new()])
}

fn generate_lines(
    model: &NGramModel,
    cfg: &StrategyConfig,
    prompts: &[String],
    num: usize,
    max_len: usize,
    seed: u64,
) -> Result<Vec<GenerationLine>, CliError> {
    if max_len == 0 {
        return Err(CliError::Input("--max-len must be at least 1".into()));
    }
    let encoded: Vec<Vec<TokenId>> = (0..num)
        .map(|i| model.encode_text(&prompts[i % prompts.len()]))
        .collect();
    let unknown: usize = prompts
        .iter()
        .map(|p| model.vocab().count_unknown(&tokenize(p, model.config().lowercase)))
        .sum();
    if unknown > 0 {
        eprintln!("warning: {unknown} prompt token(s) not in the model vocabulary, mapped to <unk>");
    }
    let records = batch_generate(model, cfg, &encoded, max_len, seed)?;
    Ok(records
        .iter()
        .enumerate()
        .map(|(i, r)| GenerationLine::from_record(i, r, model.vocab()))
        .collect())
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    let (cfg, notes) = a.strategy.resolve()?;
    for n in &notes {
        eprintln!("note: {n}");
    }
    let mut manifest = RunManifest::new(
        "generate",
        json!({
            "model": a.model.display().to_string(),
            "strategy": cfg,
            "defaults_applied": notes,
            "prompt": a.prompt,
            "prompts": a.prompts.as_ref().map(|p| p.display().to_string()),
            "num": a.num,
            "max_len": a.max_len,
            "seed": a.seed,
            "out": a.out.display().to_string(),
        }),
    );
    let model = load_model(&a.model, &mut manifest)?;
    let prompts = prompt_lines(a, &mut manifest)?;
    let lines = generate_lines(&model, &cfg, &prompts, a.num, a.max_len, a.seed)?;
    write_atomic(&a.out, to_jsonl(&lines).as_bytes())?;
    manifest.write_for(&a.out)
}

fn warn_unknown(model: &NGramModel, label: &str, sequences: &[TextSequence]) {
    let unknown: usize = sequences
        .iter()
        .map(|s| model.vocab().count_unknown(&s.context) + model.vocab().count_unknown(&s.tokens))
        .sum();
    if unknown > 0 {
        eprintln!("warning: {unknown} token(s) unknown to {label}, scored as <unk>");
    }
}

fn reference_sequences(model: &NGramModel, lines: &[String]) -> Vec<TextSequence> {
    lines
        .iter()
        .map(|l| TextSequence {
            context: Vec::new(),
            tokens: tokenize(l, model.config().lowercase),
            ends_with_eos: true,
        })
        .collect()
}

/// The report written by `evaluate`, optionally with reference and deltas.
pub fn evaluation_text(
    model_g: &NGramModel,
    model_i: &NGramModel,
    sequences: &[TextSequence],
    reference: Option<&[TextSequence]>,
) -> Result<String, CliError> {
    warn_unknown(model_g, "model_g", sequences);
    warn_unknown(model_i, "model_i", sequences);
    let report = metrics::evaluate_corpus(model_g, model_i, sequences)?;
    let mut out = report.to_kv("");
    if let Some(reference) = reference {
        let r = metrics::evaluate_corpus(model_g, model_i, reference)?;
        out.push_str(&r.to_kv("reference."));
        out.push_str(&metrics::deltas_to_kv(&report.deltas(&r), "delta."));
    }
    Ok(out)
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(
        "evaluate",
        json!({
            "generations": a.generations.display().to_string(),
            "model_g": a.model_g.display().to_string(),
            "model_i": a.model_i.display().to_string(),
            "reference": a.reference.as_ref().map(|p| p.display().to_string()),
            "out": a.out.display().to_string(),
        }),
    );
    let text = read_text(&a.generations)?;
    manifest.add_input(&a.generations, text.as_bytes());
    let lines = parse_jsonl(&text).map_err(|e| CliError::Input(format!("{}: {e}", a.generations.display())))?;
    if lines.is_empty() {
        return Err(CliError::Input(format!("{} contains no generations", a.generations.display())));
    }
    let model_g = load_model(&a.model_g, &mut manifest)?;
    let model_i = load_model(&a.model_i, &mut manifest)?;
    let sequences: Vec<TextSequence> = lines.iter().map(GenerationLine::to_sequence).collect();
    let reference = match &a.reference {
        Some(p) => {
            let docs = read_lines(p, &mut manifest)?;
            if docs.is_empty() {
                return Err(CliError::Input(format!("{} has no text", p.display())));
            }
            Some(reference_sequences(&model_g, &docs))
        }
        None => None,
    };
    let out = evaluation_text(&model_g, &model_i, &sequences, reference.as_deref())?;
    write_atomic(&a.out, out.as_bytes())?;
    manifest.write_for(&a.out)
}

/// CSV histogram plus a trailing `# ...` summary line.
pub fn epsilon_csv(profile: &metrics::EpsilonProfile) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for (lo, hi, c) in profile.histogram.bins() {
        let _ = writeln!(out, "{lo:.6},{hi:.6},{c}");
    }
    let _ = writeln!(out, "# n_tokens={},mean_eps={:.6},unit=nats", profile.n_tokens, profile.mean);
    out
}

pub fn cmd_epsilon(a: &EpsilonArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new(
        "epsilon",
        json!({
            "model": a.model.display().to_string(),
            "text": a.text.display().to_string(),
            "out": a.out.display().to_string(),
            "bin_width": metrics::DEFAULT_BIN_WIDTH,
            "bins": metrics::DEFAULT_BINS,
        }),
    );
    let model = load_model(&a.model, &mut manifest)?;
    let lines = read_lines(&a.text, &mut manifest)?;
    if lines.is_empty() {
        return Err(CliError::Input(format!("{} has no text", a.text.display())));
    }
    let profile = metrics::epsilon_profile(&model, &encode_documents(&model, &lines))?;
    println!("tokens: {}", profile.n_tokens);
    println!("mean epsilon: {:.6} nats", profile.mean);
    write_atomic(&a.out, epsilon_csv(&profile).as_bytes())?;
    manifest.write_for(&a.out)
}

/// Parses `name[:value]`, e.g. `typical:0.95` or `greedy`.
pub fn parse_strategy_spec(spec: &str) -> Result<StrategyConfig, CliError> {
    let (name, value) = match spec.split_once(':') {
        Some((n, v)) => (n.trim(), Some(v.trim())),
        None => (spec.trim(), None),
    };
    let bad = || CliError::Input(format!("invalid strategy spec {spec:?}"));
    let real = |default: f64| -> Result<f64, CliError> { value.map_or(Ok(default), |v| v.parse().map_err(|_| bad())) };
    let cfg = match name {
        "greedy" if value.is_none() => StrategyConfig::Greedy,
        "ancestral" if value.is_none() => StrategyConfig::Ancestral,
        "temperature" => StrategyConfig::Temperature { t: real(DEFAULT_TEMPERATURE)? },
        "topk" => StrategyConfig::TopK {
            k: value.map_or(Ok(DEFAULT_K), |v| v.parse().map_err(|_| bad()))?,
        },
        "nucleus" => StrategyConfig::Nucleus { n: real(DEFAULT_N)? },
        "typical" => StrategyConfig::Typical { tau: real(DEFAULT_TAU)? },
        _ => return Err(bad()),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_cell(x: f64) -> String {
    format!("{x:.4}")
}

pub fn cmd_compare(a: &CompareArgs) -> Result<(), CliError> {
    if a.strategies.is_empty() {
        return Err(CliError::Input("--strategies must list at least one strategy".into()));
    }
    let configs = a
        .strategies
        .iter()
        .map(|s| parse_strategy_spec(s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut manifest = RunManifest::new(
        "compare",
        json!({
            "model_g": a.model_g.display().to_string(),
            "model_i": a.model_i.display().to_string(),
            "strategies": configs,
            "prompts": a.prompts.as_ref().map(|p| p.display().to_string()),
            "num": a.num,
            "max_len": a.max_len,
            "seed": a.seed,
            "reference": a.reference.as_ref().map(|p| p.display().to_string()),
            "out": a.out.display().to_string(),
        }),
    );
    let model_g = load_model(&a.model_g, &mut manifest)?;
    let model_i = load_model(&a.model_i, &mut manifest)?;
    let prompts = match &a.prompts {
        Some(p) => {
            let lines = read_lines(p, &mut manifest)?;
            if lines.is_empty() {
                return Err(CliError::Input(format!("{} has no prompts", p.display())));
            }
            lines
        }
        None => vec![String::new()],
    };

    let mut table = String::from("strategy\tppl_g\tppl_i\trep\tzipf\tdiversity\teps_mean\tn_tokens\n");
    let mut row = |label: &str, r: &metrics::MetricsReport| {
        let _ = writeln!(
            table,
            "{label}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            fmt_cell(r.ppl_g),
            fmt_cell(r.ppl_i),
            fmt_cell(r.rep),
            fmt_cell(r.zipf),
            fmt_cell(r.diversity),
            fmt_cell(r.eps_mean),
            r.n_tokens
        );
    };
    if let Some(p) = &a.reference {
        let docs = read_lines(p, &mut manifest)?;
        if docs.is_empty() {
            return Err(CliError::Input(format!("{} has no text", p.display())));
        }
        let r = metrics::evaluate_corpus(&model_g, &model_i, &reference_sequences(&model_g, &docs))?;
        row("reference", &r);
    }
    for cfg in &configs {
        let lines = generate_lines(&model_g, cfg, &prompts, a.num, a.max_len, a.seed)?;
        let seqs: Vec<TextSequence> = lines.iter().map(GenerationLine::to_sequence).collect();
        let r = metrics::evaluate_corpus(&model_g, &model_i, &seqs)?;
        row(&cfg.to_string(), &r);
    }
    print!("{table}");
    write_atomic(&a.out, table.as_bytes())?;
    manifest.write_for(&a.out)
}
