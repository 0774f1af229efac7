//! `swan`: build template banks, inject and detect sentence-level semantic
//! watermarks, and run the evaluation harness.
//!
//! Machine-readable JSON goes to stdout, logs to stderr. Exit codes:
//! 0 ok / not watermarked, 10 watermarked, 2 usage error, 3 external
//! service failure.

mod clientsel;
mod config;
mod ioutil;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use swan_core::amr::{read_corpus, CorpusLayout};
use swan_core::bank::{
    build_bank_with, is_world_readable, load_bank, restrict_bank_permissions, save_bank,
    AbstractionRules, BankParams,
};
use swan_core::clients::ClientError;
use swan_core::detector::{detect, estimate_lambda, score_document, DetectConfig};
use swan_core::evalkit::{
    bank_size_sweep, judge_quality, roc, run_attack, simulate_detection, trial_histogram,
};
use swan_core::injector::{inject, InjectionConfig};
use swan_core::matcher::{s2match, ConceptSimilarity, MatchConfig, MatchMode, SimilarityTable};
use swan_core::{parse_penman, Decision};

use clientsel::{
    build_llm, build_paraphraser, build_parser, HttpFlags, LlmFlags, ParaphraseFlags, ParserFlags,
};
use config::Layers;
use ioutil::{emit_json, maybe_write_csv, read_paragraphs, read_scores, read_sessions};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or unusable input files (exit 2).
    Usage(String),
    /// External service failure (exit 3).
    External(String),
    /// Everything else (exit 1).
    Other(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::External(m) | CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::External(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn from_client(e: &ClientError) -> Option<CliError> {
    match e {
        ClientError::Transport { .. }
        | ClientError::Timeout
        | ClientError::RateLimited { .. }
        | ClientError::ParserUnavailable(_) => Some(CliError::External(e.to_string())),
        _ => None,
    }
}

impl From<swan_core::DetectError> for CliError {
    fn from(e: swan_core::DetectError) -> Self {
        if let swan_core::DetectError::Client(c) = &e {
            if let Some(ce) = from_client(c) {
                return ce;
            }
        }
        CliError::Other(e.to_string())
    }
}

impl From<swan_core::InjectError> for CliError {
    fn from(e: swan_core::InjectError) -> Self {
        if let swan_core::InjectError::Client(c) = &e {
            if let Some(ce) = from_client(c) {
                return ce;
            }
        }
        CliError::Other(e.to_string())
    }
}

impl From<swan_core::EvalError> for CliError {
    fn from(e: swan_core::EvalError) -> Self {
        match &e {
            swan_core::EvalError::Client(c) => {
                from_client(c).unwrap_or(CliError::Other(e.to_string()))
            }
            swan_core::EvalError::Detect(swan_core::DetectError::Client(c)) => {
                from_client(c).unwrap_or(CliError::Other(e.to_string()))
            }
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<swan_core::BankError> for CliError {
    fn from(e: swan_core::BankError) -> Self {
        CliError::Other(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "swan",
    version,
    about = "Sentence-level semantic text watermarking over AMR graphs",
    long_about = "Build a secret template bank from an AMR corpus, inject watermarks by \
                  S2match-guided rejection sampling, detect them with per-sentence bank \
                  matching plus a one-proportion z-test, and evaluate the whole pipeline.\n\n\
                  Configuration layers: built-in defaults < config file (--config, flat \
                  `key = value` lines) < environment (SWAN_<KEY>) < flags."
)]
struct Cli {
    /// Flat key=value config file (keys match the long flags)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Template bank operations
    Bank {
        #[command(subcommand)]
        action: BankAction,
    },
    /// Generate watermarked sentences by rejection sampling
    Inject(InjectArgs),
    /// Decide whether a text is watermarked
    Detect(DetectArgs),
    /// Score the S2match similarity of two Penman files
    Score(ScoreArgs),
    /// Estimate the null hit-rate lambda from non-watermarked text
    EstimateLambda(EstimateArgs),
    /// Evaluation harness
    Eval {
        #[command(subcommand)]
        action: EvalAction,
    },
}

#[derive(Subcommand)]
enum BankAction {
    /// Build the bank from an AMR corpus and save it
    Build(BankBuildArgs),
}

#[derive(Args)]
struct BankBuildArgs {
    /// Corpus file of Penman graphs (blank-line-separated blocks)
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Treat the corpus as one graph per line
    #[arg(long)]
    per_line: bool,
    /// Output bank file (the secret key)
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Minimum template frequency (key: min-freq, default 3)
    #[arg(long)]
    min_freq: Option<u32>,
    /// Maximum template frequency (key: max-freq, default 20)
    #[arg(long)]
    max_freq: Option<u32>,
    /// Minimum concept nodes per template (key: min-nodes, default 3)
    #[arg(long)]
    min_nodes: Option<usize>,
    /// Bank size (key: size, default 50)
    #[arg(long)]
    size: Option<usize>,
    /// Sampling seed (key: seed, default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Override the named-entity concept list (one concept per line)
    #[arg(long, value_name = "FILE")]
    ne_list: Option<PathBuf>,
    /// Skip restricting the bank file to owner-only permissions
    #[arg(long)]
    insecure: bool,
}

#[derive(Args)]
struct InjectArgs {
    /// Bank file
    #[arg(long, value_name = "FILE")]
    bank: PathBuf,
    /// File holding the initial context sentence s0
    #[arg(long, value_name = "FILE")]
    prompt_file: PathBuf,
    /// Number of sentences to generate (key: sentences, default 5)
    #[arg(long)]
    sentences: Option<usize>,
    /// Acceptance threshold theta_accept (key: theta-accept, default 0.7)
    #[arg(long)]
    theta_accept: Option<f64>,
    /// RNG seed (key: seed, default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Template switches per sentence (key: max-templates, default 10)
    #[arg(long)]
    max_templates: Option<usize>,
    /// Attempts per template (key: max-attempts, default 5)
    #[arg(long)]
    max_attempts: Option<usize>,
    /// Hill-climb restarts for acceptance scoring (key: restarts, default 8)
    #[arg(long)]
    restarts: Option<u32>,
    /// On budget exhaustion keep the best-scoring attempt, not the last
    #[arg(long)]
    best_so_far_fallback: bool,
    /// Write the full session JSON here (stdout gets a summary)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    llm: LlmFlags,
    #[command(flatten)]
    parser: ParserFlags,
    #[command(flatten)]
    http: HttpFlags,
}

#[derive(Args)]
struct DetectArgs {
    /// Bank file
    #[arg(long, value_name = "FILE")]
    bank: PathBuf,
    /// Text file to score
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Null hit-rate lambda (key: lambda, default 0.05)
    #[arg(long)]
    lambda: Option<f64>,
    /// Flagging threshold theta_detect (key: theta-detect, default 0.7)
    #[arg(long)]
    theta_detect: Option<f64>,
    /// Decision threshold on z (key: z-threshold, default 1.645)
    #[arg(long)]
    z_threshold: Option<f64>,
    /// Input is one sentence per line (skip segmentation)
    #[arg(long)]
    pre_segmented: bool,
    /// Match parsed graphs literally instead of abstracting them first
    #[arg(long)]
    no_abstract: bool,
    /// Hill-climb restarts (key: restarts, default 8)
    #[arg(long)]
    restarts: Option<u32>,
    /// Graded concept-similarity table (key: sim-table)
    #[arg(long, value_name = "FILE")]
    sim_table: Option<PathBuf>,
    /// Match seed (key: seed, default 0)
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    parser: ParserFlags,
    #[command(flatten)]
    http: HttpFlags,
}

#[derive(Args)]
struct ScoreArgs {
    /// First Penman file
    #[arg(long, value_name = "FILE")]
    a: PathBuf,
    /// Second Penman file
    #[arg(long, value_name = "FILE")]
    b: PathBuf,
    /// Use the exact alignment oracle instead of hill climbing
    #[arg(long)]
    oracle: bool,
    /// Hill-climb restarts (key: restarts, default 8)
    #[arg(long)]
    restarts: Option<u32>,
    /// Match seed (key: seed, default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Graded concept-similarity table (key: sim-table)
    #[arg(long, value_name = "FILE")]
    sim_table: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Bank file
    #[arg(long, value_name = "FILE")]
    bank: PathBuf,
    /// Non-watermarked text corpus (blank-line-separated paragraphs)
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Input is one sentence per line
    #[arg(long)]
    pre_segmented: bool,
    /// Flagging threshold theta_detect (key: theta-detect, default 0.7)
    #[arg(long)]
    theta_detect: Option<f64>,
    /// Hill-climb restarts (key: restarts, default 8)
    #[arg(long)]
    restarts: Option<u32>,
    /// Match seed (key: seed, default 0)
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    parser: ParserFlags,
    #[command(flatten)]
    http: HttpFlags,
}

#[derive(Subcommand)]
enum EvalAction {
    /// ROC / AUC / TPR@FPR from score files
    Roc(EvalRocArgs),
    /// Paraphrase-attack detectability
    Attack(EvalAttackArgs),
    /// Bank-size ablation sweep
    Sweep(EvalSweepArgs),
    /// Rejection-sampling trial histogram from session logs
    Trials(EvalTrialsArgs),
    /// LLM-judged text quality of a paragraph
    Quality(EvalQualityArgs),
    /// Synthetic detectability simulation
    Simulate(EvalSimulateArgs),
}

#[derive(Args)]
struct EvalRocArgs {
    /// Positive-class scores, one per line
    #[arg(long, value_name = "FILE")]
    pos: PathBuf,
    /// Negative-class scores, one per line
    #[arg(long, value_name = "FILE")]
    neg: PathBuf,
    /// Also write CSV rows here
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct EvalAttackArgs {
    /// Session JSON (object or array) produced by `swan inject`
    #[arg(long, value_name = "FILE")]
    sessions: PathBuf,
    /// Non-watermarked paragraphs (blank-line-separated)
    #[arg(long, value_name = "FILE")]
    negatives: PathBuf,
    /// Bank file
    #[arg(long, value_name = "FILE")]
    bank: PathBuf,
    /// Negatives are one sentence per line
    #[arg(long)]
    pre_segmented: bool,
    /// Null hit-rate lambda (key: lambda, default 0.05)
    #[arg(long)]
    lambda: Option<f64>,
    /// Flagging threshold theta_detect (key: theta-detect, default 0.7)
    #[arg(long)]
    theta_detect: Option<f64>,
    /// Also write CSV rows here
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    #[command(flatten)]
    paraphrase: ParaphraseFlags,
    #[command(flatten)]
    llm: LlmFlags,
    #[command(flatten)]
    parser: ParserFlags,
    #[command(flatten)]
    http: HttpFlags,
}

#[derive(Args)]
struct EvalSweepArgs {
    /// AMR corpus to rebuild banks from
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Treat the corpus as one graph per line
    #[arg(long)]
    per_line: bool,
    /// Comma-separated bank sizes, e.g. 50,100,500,800
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Watermarked paragraphs file
    #[arg(long, value_name = "FILE")]
    positives: PathBuf,
    /// Non-watermarked paragraphs file
    #[arg(long, value_name = "FILE")]
    negatives: PathBuf,
    /// Paragraph files are one sentence per line
    #[arg(long)]
    pre_segmented: bool,
    /// Minimum template frequency (key: min-freq, default 3)
    #[arg(long)]
    min_freq: Option<u32>,
    /// Maximum template frequency (key: max-freq, default 20)
    #[arg(long)]
    max_freq: Option<u32>,
    /// Minimum concept nodes (key: min-nodes, default 3)
    #[arg(long)]
    min_nodes: Option<usize>,
    /// Bank sampling seed (key: seed, default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Null hit-rate lambda (key: lambda, default 0.05)
    #[arg(long)]
    lambda: Option<f64>,
    /// Flagging threshold theta_detect (key: theta-detect, default 0.7)
    #[arg(long)]
    theta_detect: Option<f64>,
    /// Also write CSV rows here
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    #[command(flatten)]
    parser: ParserFlags,
    #[command(flatten)]
    http: HttpFlags,
}

#[derive(Args)]
struct EvalTrialsArgs {
    /// Session JSON files (each an object or an array)
    #[arg(long, value_name = "FILE", num_args = 1.., required = true)]
    sessions: Vec<PathBuf>,
    /// Also write CSV rows here
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct EvalQualityArgs {
    /// Paragraph text file to judge
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    #[command(flatten)]
    llm: LlmFlags,
    #[command(flatten)]
    http: HttpFlags,
}

#[derive(Args)]
struct EvalSimulateArgs {
    /// Paragraphs per class
    #[arg(long, default_value_t = 250)]
    paragraphs: usize,
    /// Sentences per paragraph (key: sentences, default 5)
    #[arg(long)]
    sentences: Option<usize>,
    /// Per-sentence hit probability for watermarked text
    #[arg(long, default_value_t = 0.9)]
    p_hit_pos: f64,
    /// Per-sentence hit probability for clean text
    #[arg(long, default_value_t = 0.05)]
    p_hit_neg: f64,
    /// Null hit-rate lambda (key: lambda, default 0.05)
    #[arg(long)]
    lambda: Option<f64>,
    /// Simulation seed (key: seed, default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Also write CSV rows here
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let layers = Layers::load(cli.config.as_deref())?;
    match cli.command {
        Command::Bank { action } => match action {
            BankAction::Build(args) => cmd_bank_build(args, &layers),
        },
        Command::Inject(args) => cmd_inject(args, &layers),
        Command::Detect(args) => cmd_detect(args, &layers),
        Command::Score(args) => cmd_score(args, &layers),
        Command::EstimateLambda(args) => cmd_estimate(args, &layers),
        Command::Eval { action } => match action {
            EvalAction::Roc(args) => cmd_eval_roc(args),
            EvalAction::Attack(args) => cmd_eval_attack(args, &layers),
            EvalAction::Sweep(args) => cmd_eval_sweep(args, &layers),
            EvalAction::Trials(args) => cmd_eval_trials(args),
            EvalAction::Quality(args) => cmd_eval_quality(args, &layers),
            EvalAction::Simulate(args) => cmd_eval_simulate(args, &layers),
        },
    }
}

fn bank_params(
    layers: &Layers,
    min_freq: Option<u32>,
    max_freq: Option<u32>,
    min_nodes: Option<usize>,
    size: Option<usize>,
    seed: Option<u64>,
) -> Result<BankParams, CliError> {
    Ok(BankParams {
        min_freq: layers.resolve("min-freq", min_freq, 3)?,
        max_freq: layers.resolve("max-freq", max_freq, 20)?,
        min_nodes: layers.resolve("min-nodes", min_nodes, 3)?,
        bank_size: layers.resolve("size", size, 50)?,
        seed: layers.resolve("seed", seed, 0)?,
    })
}

fn match_config(
    layers: &Layers,
    restarts: Option<u32>,
    seed: Option<u64>,
    sim_table: Option<&PathBuf>,
    oracle: bool,
) -> Result<MatchConfig, CliError> {
    let table_path: Option<PathBuf> = match sim_table {
        Some(p) => Some(p.clone()),
        None => layers
            .resolve_opt::<String>("sim-table", None)?
            .map(PathBuf::from),
    };
    let concept_similarity = match table_path {
        Some(path) => ConceptSimilarity::Table(
            SimilarityTable::load(&path).map_err(|e| CliError::Usage(e.to_string()))?,
        ),
        None => ConceptSimilarity::Exact,
    };
    Ok(MatchConfig {
        concept_similarity,
        restarts: layers.resolve("restarts", restarts, 8)?,
        mode: if oracle {
            MatchMode::ExactOracle
        } else {
            MatchMode::HillClimb
        },
        oracle_var_cap: 8,
        seed: layers.resolve("seed", seed, 0)?,
    })
}

fn detect_config(
    layers: &Layers,
    lambda: Option<f64>,
    theta_detect: Option<f64>,
    z_threshold: Option<f64>,
    no_abstract: bool,
) -> Result<DetectConfig, CliError> {
    Ok(DetectConfig {
        theta_detect: layers.resolve("theta-detect", theta_detect, 0.7)?,
        lambda: layers.resolve("lambda", lambda, 0.05)?,
        z_threshold: layers.resolve("z-threshold", z_threshold, 1.645)?,
        abstract_before_match: !no_abstract,
        rules: AbstractionRules::default(),
    })
}

fn cmd_bank_build(args: BankBuildArgs, layers: &Layers) -> Result<u8, CliError> {
    let layout = if args.per_line {
        CorpusLayout::PerLine
    } else {
        CorpusLayout::Blocks
    };
    let corpus = read_corpus(&args.corpus, layout)
        .map_err(|e| CliError::Usage(format!("corpus: {e}")))?;
    eprintln!("read {} corpus graphs", corpus.len());
    let params = bank_params(
        layers,
        args.min_freq,
        args.max_freq,
        args.min_nodes,
        args.size,
        args.seed,
    )?;
    let mut rules = AbstractionRules::default();
    if let Some(ne) = &args.ne_list {
        rules = rules
            .with_ne_concepts_file(ne)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let bank = build_bank_with(corpus, &params, &rules)?;
    save_bank(&bank, &args.out)?;
    if args.insecure {
        eprintln!("warning: saving the secret bank without restricting permissions");
    } else {
        restrict_bank_permissions(&args.out)?;
        if is_world_readable(&args.out)? {
            return Err(CliError::Other(format!(
                "{} is still world-readable; the bank is the secret key (use --insecure to allow this)",
                args.out.display()
            )));
        }
    }
    emit_json(&serde_json::json!({
        "templates": bank.len(),
        "digest": bank.created_from(),
        "params": bank.params(),
        "path": args.out,
    }))?;
    Ok(0)
}

fn cmd_inject(args: InjectArgs, layers: &Layers) -> Result<u8, CliError> {
    let bank = load_bank(&args.bank)?;
    let s0 = std::fs::read_to_string(&args.prompt_file)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.prompt_file.display())))?
        .trim()
        .to_string();
    if s0.is_empty() {
        return Err(CliError::Usage("prompt file is empty".into()));
    }
    let cfg = InjectionConfig {
        n_sentences: layers.resolve("sentences", args.sentences, 5)?,
        max_templates: layers.resolve("max-templates", args.max_templates, 10)?,
        max_attempts: layers.resolve("max-attempts", args.max_attempts, 5)?,
        theta_accept: layers.resolve("theta-accept", args.theta_accept, 0.7)?,
        rng_seed: layers.resolve("seed", args.seed, 0)?,
        best_so_far_fallback: args.best_so_far_fallback,
    };
    let llm = build_llm(&args.llm, &args.http, layers)?;
    let parser = build_parser(&args.parser, &args.http, layers)?;
    let match_cfg = match_config(layers, args.restarts, args.seed, None, false)?;
    let session = inject(&s0, &bank, &cfg, llm.as_ref(), parser.as_ref(), &match_cfg)?;
    match &args.out {
        Some(path) => {
            let json = serde_json::to_string_pretty(&session)
                .map_err(|e| CliError::Other(e.to_string()))?;
            std::fs::write(path, json)
                .map_err(|e| CliError::Other(format!("cannot write {}: {e}", path.display())))?;
            emit_json(&serde_json::json!({
                "sentences": session.accepted.len(),
                "mean_trials": session.mean_trials(),
                "fallbacks": session.accepted.iter().filter(|a| a.fallback).count(),
                "session": path,
            }))?;
        }
        None => emit_json(&session)?,
    }
    Ok(0)
}

fn cmd_detect(args: DetectArgs, layers: &Layers) -> Result<u8, CliError> {
    let bank = load_bank(&args.bank)?;
    let parser = build_parser(&args.parser, &args.http, layers)?;
    let cfg = detect_config(
        layers,
        args.lambda,
        args.theta_detect,
        args.z_threshold,
        args.no_abstract,
    )?;
    let match_cfg = match_config(layers, args.restarts, args.seed, args.sim_table.as_ref(), false)?;
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.input.display())))?;
    let report = if args.pre_segmented {
        let sentences: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        score_document(&sentences, &bank, &cfg, parser.as_ref(), &match_cfg)?
    } else {
        detect(&text, &bank, &cfg, parser.as_ref(), &match_cfg)?
    };
    emit_json(&report)?;
    Ok(match report.decision {
        Decision::Watermarked => 10,
        Decision::NotWatermarked => 0,
    })
}

fn cmd_score(args: ScoreArgs, layers: &Layers) -> Result<u8, CliError> {
    let read_graph = |path: &PathBuf| -> Result<swan_core::AmrGraph, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        parse_penman(text.trim())
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    };
    let a = read_graph(&args.a)?;
    let b = read_graph(&args.b)?;
    let cfg = match_config(
        layers,
        args.restarts,
        args.seed,
        args.sim_table.as_ref(),
        args.oracle,
    )?;
    let score = s2match(&a, &b, &cfg).map_err(|e| CliError::Other(e.to_string()))?;
    emit_json(&score)?;
    Ok(0)
}

fn cmd_estimate(args: EstimateArgs, layers: &Layers) -> Result<u8, CliError> {
    let bank = load_bank(&args.bank)?;
    let parser = build_parser(&args.parser, &args.http, layers)?;
    let cfg = detect_config(layers, None, args.theta_detect, None, false)?;
    let match_cfg = match_config(layers, args.restarts, args.seed, None, false)?;
    let sentences: Vec<String> = read_paragraphs(&args.corpus, args.pre_segmented)?
        .into_iter()
        .flatten()
        .collect();
    let estimate = estimate_lambda(&sentences, &bank, &cfg, parser.as_ref(), &match_cfg)?;
    emit_json(&estimate)?;
    Ok(0)
}

fn cmd_eval_roc(args: EvalRocArgs) -> Result<u8, CliError> {
    let pos = read_scores(&args.pos)?;
    let neg = read_scores(&args.neg)?;
    let result = roc(&pos, &neg)?;
    let mut rows: Vec<String> = result.scores_pos.iter().map(|z| format!("pos,{z}")).collect();
    rows.extend(result.scores_neg.iter().map(|z| format!("neg,{z}")));
    maybe_write_csv(args.csv.as_deref(), "class,z", &rows)?;
    emit_json(&result)?;
    Ok(0)
}

fn cmd_eval_attack(args: EvalAttackArgs, layers: &Layers) -> Result<u8, CliError> {
    let bank = load_bank(&args.bank)?;
    let sessions = read_sessions(&args.sessions)?;
    let negatives = read_paragraphs(&args.negatives, args.pre_segmented)?;
    let attacker = build_paraphraser(&args.paraphrase, &args.llm, &args.http, layers)?;
    let parser = build_parser(&args.parser, &args.http, layers)?;
    let cfg = detect_config(layers, args.lambda, args.theta_detect, None, false)?;
    let match_cfg = match_config(layers, None, None, None, false)?;
    let outcome = run_attack(
        &sessions,
        &negatives,
        attacker.as_ref(),
        &bank,
        parser.as_ref(),
        &cfg,
        &match_cfg,
    )?;
    let rows = vec![
        format!(
            "clean,{},{},{}",
            outcome.clean.auc, outcome.clean.tpr_at[0].tpr, outcome.clean.tpr_at[1].tpr
        ),
        format!(
            "attacked,{},{},{}",
            outcome.attacked.auc, outcome.attacked.tpr_at[0].tpr, outcome.attacked.tpr_at[1].tpr
        ),
    ];
    maybe_write_csv(args.csv.as_deref(), "variant,auc,tpr_at_1pct,tpr_at_5pct", &rows)?;
    emit_json(&outcome)?;
    Ok(0)
}

fn cmd_eval_sweep(args: EvalSweepArgs, layers: &Layers) -> Result<u8, CliError> {
    if args.sizes.is_empty() {
        return Err(CliError::Usage("--sizes must list at least one size".into()));
    }
    let layout = if args.per_line {
        CorpusLayout::PerLine
    } else {
        CorpusLayout::Blocks
    };
    let corpus = read_corpus(&args.corpus, layout)
        .map_err(|e| CliError::Usage(format!("corpus: {e}")))?;
    let base = bank_params(
        layers,
        args.min_freq,
        args.max_freq,
        args.min_nodes,
        Some(1),
        args.seed,
    )?;
    let positives = read_paragraphs(&args.positives, args.pre_segmented)?;
    let negatives = read_paragraphs(&args.negatives, args.pre_segmented)?;
    let parser = build_parser(&args.parser, &args.http, layers)?;
    let cfg = detect_config(layers, args.lambda, args.theta_detect, None, false)?;
    let match_cfg = match_config(layers, None, None, None, false)?;
    let results = bank_size_sweep(
        &corpus,
        &args.sizes,
        &base,
        &positives,
        &negatives,
        parser.as_ref(),
        &cfg,
        &match_cfg,
    )?;
    let rows: Vec<String> = results
        .iter()
        .map(|(size, r)| format!("{size},{},{},{}", r.auc, r.tpr_at[0].tpr, r.tpr_at[1].tpr))
        .collect();
    maybe_write_csv(args.csv.as_deref(), "size,auc,tpr_at_1pct,tpr_at_5pct", &rows)?;
    emit_json(&results)?;
    Ok(0)
}

fn cmd_eval_trials(args: EvalTrialsArgs) -> Result<u8, CliError> {
    let mut sessions = Vec::new();
    for path in &args.sessions {
        sessions.extend(read_sessions(path)?);
    }
    let histogram = trial_histogram(&sessions)?;
    let rows: Vec<String> = histogram
        .buckets
        .iter()
        .map(|b| format!("{},{},{}", b.lo, b.hi, b.count))
        .collect();
    maybe_write_csv(args.csv.as_deref(), "lo,hi,count", &rows)?;
    emit_json(&histogram)?;
    Ok(0)
}

fn cmd_eval_quality(args: EvalQualityArgs, layers: &Layers) -> Result<u8, CliError> {
    let paragraph = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.input.display())))?
        .trim()
        .to_string();
    let judge = build_llm(&args.llm, &args.http, layers)?;
    let score = judge_quality(&paragraph, judge.as_ref())?;
    emit_json(&score)?;
    Ok(0)
}

fn cmd_eval_simulate(args: EvalSimulateArgs, layers: &Layers) -> Result<u8, CliError> {
    let result = simulate_detection(
        args.paragraphs,
        layers.resolve("sentences", args.sentences, 5)?,
        args.p_hit_pos,
        args.p_hit_neg,
        layers.resolve("lambda", args.lambda, 0.05)?,
        layers.resolve("seed", args.seed, 0)?,
    )?;
    let mut rows: Vec<String> = result.scores_pos.iter().map(|z| format!("pos,{z}")).collect();
    rows.extend(result.scores_neg.iter().map(|z| format!("neg,{z}")));
    maybe_write_csv(args.csv.as_deref(), "class,z", &rows)?;
    emit_json(&result)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn every_config_key_is_documented_in_help() {
        fn collect_help(cmd: &clap::Command) -> String {
            let mut out = cmd.clone().render_long_help().to_string();
            for sub in cmd.get_subcommands() {
                out.push_str(&collect_help(sub));
            }
            out
        }
        let help = collect_help(&Cli::command());
        for key in config::CONFIG_KEYS {
            assert!(
                help.contains(&format!("--{key}")) || help.contains(&format!("key: {key}")),
                "config key `{key}` missing from the help output"
            );
        }
    }
}
