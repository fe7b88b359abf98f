//! Command line front end. Each subcommand is a thin mapping onto one
//! library operation: `parse` onto [`lean_stmt::parse_theorem`], `augment`
//! onto [`mutgen::augment`], `score` and `sweep` onto
//! [`evalmetrics::score_records`], `eval` onto [`evalmetrics::evaluate`],
//! and `report` onto [`mutgen::distribution_report`].
//!
//! Exit codes: 0 on success, 1 on data or validation errors, 2 on
//! transport failures against a remote scoring service. Diagnostics go to
//! stderr; results go to files named by flags or to stdout.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::backend::{
    Backend, BackendConfig, BackendError, MockBackend, WireBackend, DEFAULT_EMBEDDING_DIM,
    ENDPOINT_ENV_VAR,
};
use crate::dataset;
use crate::evalmetrics::{self, EvalConfig, EvalError, DEFAULT_THETA};
use crate::lean_stmt::{self, Bracket};
use crate::mutgen::{self, AugmentConfig, Label, MisalignKind};

#[derive(Parser)]
#[command(
    name = "lean-align",
    version,
    about = "Alignment tooling for informal/formal statement pairs: parse Lean \
             theorem headers, augment corpora with misaligned negatives, score \
             pairs through a backend, and evaluate detection quality."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a Lean theorem header and print its structure as JSON.
    Parse(ParseArgs),
    /// Expand aligned records into positives plus misaligned negatives.
    Augment(AugmentArgs),
    /// Score each record through a backend and print one JSON line per record.
    Score(ScoreArgs),
    /// Score a corpus and report selection accuracy and detection quality.
    Eval(EvalArgs),
    /// Report precision and recall across a grid of thresholds.
    Sweep(SweepArgs),
    /// Count misaligned records per mutation strategy.
    Report(ReportArgs),
}

#[derive(Args)]
struct ParseArgs {
    /// Statement file; reads standard input when omitted.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Output file; defaults to standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AugmentArgs {
    /// Input corpus of aligned records, one JSON object per line.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output file; defaults to standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Negatives to generate per aligned record.
    #[arg(long, default_value_t = AugmentConfig::default().negatives_per_positive)]
    negatives: usize,
    /// Seed for the deterministic strategy and site draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Strategy weights as `kind=weight,...` over constant, exponent,
    /// variable_new, variable_type, equality, random. Kinds left out get
    /// weight zero; omit the flag to weight all six equally.
    #[arg(long, value_name = "K=W,...")]
    weights: Option<String>,
    /// Distinct-mutant retry budget per negative before giving up.
    #[arg(long, default_value_t = AugmentConfig::default().max_retries_per_negative)]
    max_retries: usize,
}

#[derive(Args)]
struct BackendArgs {
    /// `mock` for the deterministic local backend, or the base URL of a
    /// scoring service. ALIGN_BACKEND_URL, when set, overrides the URL.
    #[arg(long, value_name = "MOCK|URL", default_value = "mock")]
    backend: String,
    /// Embedding dimension of the mock backend.
    #[arg(long, default_value_t = DEFAULT_EMBEDDING_DIM)]
    dim: usize,
}

#[derive(Args)]
struct ScoreArgs {
    /// Input corpus, one JSON object per line.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output file; defaults to standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Input corpus, one JSON object per line.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Detection threshold on the alignment score.
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    /// Report file; defaults to standard output.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Also render the report as a Markdown table to this file.
    #[arg(long, value_name = "FILE")]
    markdown: Option<PathBuf>,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Input corpus, one JSON object per line.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Threshold grid as `start:end:step`.
    #[arg(long, value_name = "S:E:STEP", default_value = "0:1:0.05")]
    thetas: String,
    /// Output file; defaults to standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Input corpus, one JSON object per line.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output file; defaults to standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// A command failure carrying the process exit code it maps to.
struct Failure {
    message: String,
    code: i32,
}

impl Failure {
    fn data(message: impl Into<String>) -> Failure {
        Failure {
            message: message.into(),
            code: 1,
        }
    }

    fn transport(message: impl Into<String>) -> Failure {
        Failure {
            message: message.into(),
            code: 2,
        }
    }
}

fn eval_failure(err: EvalError) -> Failure {
    let message = err.to_string();
    match err {
        EvalError::Backend {
            source: BackendError::Transport(_),
            ..
        } => Failure::transport(message),
        _ => Failure::data(message),
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Parse(args) => cmd_parse(args),
        Command::Augment(args) => cmd_augment(args),
        Command::Score(args) => cmd_score(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn read_source(input: Option<&Path>) -> Result<String, Failure> {
    match input {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display()))),
        None => {
            let mut source = String::new();
            std::io::stdin()
                .read_to_string(&mut source)
                .map_err(|e| Failure::data(format!("cannot read standard input: {e}")))?;
            Ok(source)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_corpus(path: &Path) -> Result<Vec<mutgen::ExampleRecord>, Failure> {
    dataset::read_path(path)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn bracket_name(bracket: Bracket) -> &'static str {
    match bracket {
        Bracket::Paren => "paren",
        Bracket::Implicit => "implicit",
        Bracket::Inst => "instance",
    }
}

#[derive(Serialize)]
struct BinderJson<'a> {
    bracket: &'static str,
    names: &'a [String],
    r#type: String,
    role: &'static str,
}

#[derive(Serialize)]
struct StmtJson<'a> {
    name: &'a str,
    binders: Vec<BinderJson<'a>>,
    goal: String,
    trailer: &'a str,
}

fn cmd_parse(args: ParseArgs) -> Result<(), Failure> {
    let source = read_source(args.input.as_deref())?;
    let stmt = lean_stmt::parse_theorem(&source).map_err(|e| Failure::data(e.to_string()))?;
    let json = StmtJson {
        name: &stmt.name,
        binders: stmt
            .binders
            .iter()
            .map(|group| BinderJson {
                bracket: bracket_name(group.bracket),
                names: &group.names,
                r#type: lean_stmt::join_token_texts(
                    group.type_tokens.iter().map(|t| t.text.as_str()),
                ),
                role: group.role.as_str(),
            })
            .collect(),
        goal: lean_stmt::join_token_texts(stmt.goal_tokens.iter().map(|t| t.text.as_str())),
        trailer: &stmt.trailer,
    };
    let mut text = serde_json::to_string_pretty(&json).expect("statement JSON serializes");
    text.push('\n');
    emit(args.out.as_deref(), &text)
}

fn parse_weights(spec: &str) -> Result<std::collections::BTreeMap<MisalignKind, f64>, Failure> {
    let mut weights = std::collections::BTreeMap::new();
    for entry in spec.split(',') {
        let entry = entry.trim();
        let (kind, weight) = entry
            .split_once('=')
            .ok_or_else(|| Failure::data(format!("weight entry `{entry}` is not kind=weight")))?;
        let kind: MisalignKind = kind
            .trim()
            .parse()
            .map_err(|e: String| Failure::data(e))?;
        let weight: f64 = weight
            .trim()
            .parse()
            .map_err(|_| Failure::data(format!("weight for {kind} is not a number")))?;
        if weights.insert(kind, weight).is_some() {
            return Err(Failure::data(format!("duplicate weight for {kind}")));
        }
    }
    if weights.is_empty() {
        return Err(Failure::data("no weight entries given"));
    }
    Ok(weights)
}

fn cmd_augment(args: AugmentArgs) -> Result<(), Failure> {
    let records = read_corpus(&args.input)?;
    let config = AugmentConfig {
        negatives_per_positive: args.negatives,
        strategy_weights: match args.weights.as_deref() {
            Some(spec) => parse_weights(spec)?,
            None => AugmentConfig::default().strategy_weights,
        },
        rng_seed: args.seed,
        max_retries_per_negative: args.max_retries,
    };
    let augmented =
        mutgen::augment(&records, &config).map_err(|e| Failure::data(e.to_string()))?;
    emit(args.out.as_deref(), &dataset::to_jsonl_string(&augmented))
}

fn build_backend(args: &BackendArgs) -> Result<Box<dyn Backend>, Failure> {
    if args.backend == "mock" {
        let mock = MockBackend::new(args.dim).map_err(|e| Failure::data(e.to_string()))?;
        return Ok(Box::new(mock));
    }
    let config = BackendConfig {
        endpoint: args.backend.clone(),
        ..BackendConfig::default()
    };
    let wire = WireBackend::new(&config).map_err(|e| {
        Failure::data(format!(
            "backend `{}` (after {} override): {e}",
            args.backend, ENDPOINT_ENV_VAR
        ))
    })?;
    Ok(Box::new(wire))
}

#[derive(Serialize)]
struct ScoreLine<'a> {
    id: &'a str,
    group_id: &'a str,
    label: Label,
    #[serde(skip_serializing_if = "Option::is_none")]
    misalign_kind: Option<MisalignKind>,
    certainty: f64,
    similarity: f64,
    alignment: f64,
}

fn cmd_score(args: ScoreArgs) -> Result<(), Failure> {
    let records = read_corpus(&args.input)?;
    let backend = build_backend(&args.backend)?;
    let scored =
        evalmetrics::score_records(&records, backend.as_ref()).map_err(eval_failure)?;
    let mut text = String::new();
    for entry in &scored {
        let line = ScoreLine {
            id: &entry.record.id,
            group_id: &entry.record.group_id,
            label: entry.record.label,
            misalign_kind: entry.record.misalign_kind,
            certainty: entry.scores.certainty,
            similarity: entry.scores.similarity,
            alignment: entry.scores.alignment,
        };
        text.push_str(&serde_json::to_string(&line).expect("score line serializes"));
        text.push('\n');
    }
    emit(args.out.as_deref(), &text)
}

fn cmd_eval(args: EvalArgs) -> Result<(), Failure> {
    let records = read_corpus(&args.input)?;
    let backend = build_backend(&args.backend)?;
    let config = EvalConfig { theta: args.theta };
    let report =
        evalmetrics::evaluate(&records, backend.as_ref(), &config).map_err(eval_failure)?;
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    emit(args.report.as_deref(), &text)?;
    if let Some(path) = &args.markdown {
        emit(Some(path), &report.to_markdown())?;
    }
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, end, step] = parts[..] else {
        return Err(Failure::data(format!(
            "threshold grid `{spec}` is not start:end:step"
        )));
    };
    let parse = |name: &str, text: &str| -> Result<f64, Failure> {
        text.trim()
            .parse::<f64>()
            .map_err(|_| Failure::data(format!("grid {name} `{text}` is not a number")))
    };
    let start = parse("start", start)?;
    let end = parse("end", end)?;
    let step = parse("step", step)?;
    if !start.is_finite() || !end.is_finite() || !step.is_finite() || step <= 0.0 {
        return Err(Failure::data("grid bounds must be finite with step > 0"));
    }
    if end < start {
        return Err(Failure::data("grid end must not be below its start"));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    if count > 100_000 {
        return Err(Failure::data("grid has more than 100000 points"));
    }
    Ok((0..=count)
        .map(|i| (start + i as f64 * step).min(end))
        .collect())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let records = read_corpus(&args.input)?;
    let backend = build_backend(&args.backend)?;
    let scored =
        evalmetrics::score_records(&records, backend.as_ref()).map_err(eval_failure)?;
    let grid = parse_grid(&args.thetas)?;
    let points = evalmetrics::sweep(&scored, &grid).map_err(eval_failure)?;
    let mut text = serde_json::to_string_pretty(&points).expect("sweep points serialize");
    text.push('\n');
    emit(args.out.as_deref(), &text)
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let records = read_corpus(&args.input)?;
    let counts = mutgen::distribution_report(&records);
    let mut text = serde_json::to_string_pretty(&counts).expect("counts serialize");
    text.push('\n');
    emit(args.out.as_deref(), &text)
}
