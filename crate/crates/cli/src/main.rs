//! `kath` — command-line entry point for the treebank toolkit.
//!
//! One subcommand per pipeline stage: `validate`, `reconstruct`, `ingest`,
//! `retry`, `freeze`, `split`, `train`, `parse`, `score`, `diff`. Exit
//! codes: 0 success, 1 `validate` found errors, 2 usage or IO failure.
//! Reports are JSON on stdout, duplicated to `--report-out` when given.
//! Set `KATH_LOG` (e.g. `KATH_LOG=debug`) for log output on stderr.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use serde_json::json;

use kath_core::annotate::{ingest_batch, process_retries, IngestState};
use kath_core::baseline::{load_model, predict_sentence, repair_tree, save_model, train, TrainConfig};
use kath_core::conllu::{
    parse_treebank_file, serialize_treebank, validate_treebank, Severity, Strictness, Treebank,
};
use kath_core::metrics::{check_alignment, diff_reports, evaluate, MetricsOptions};
use kath_core::reconstruct::{
    dehyphenate, join_split_words, normalize_boundary_punct, ReconstructionConfig,
    ReconstructionReport,
};
use kath_core::schema::{load_schema, AnnotationSchema};
use kath_core::snapshot::{deterministic_split, freeze, Fraction};
use kath_core::EvalReport;

#[derive(Parser)]
#[command(name = "kath", version, about = "Reproducible treebank pipeline for historical Greek")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a CoNLL-U file for structural and tag-set problems.
    Validate(ValidateArgs),
    /// Clean OCR text: dehyphenate, join split words, fix boundary punctuation.
    Reconstruct(ReconstructArgs),
    /// Consume a batch of annotation records into the admitted set.
    Ingest(IngestArgs),
    /// Apply replacement records to the retry queue.
    Retry(RetryArgs),
    /// Merge batches and retries into a validated, manifest-anchored snapshot.
    Freeze(FreezeArgs),
    /// Derive the deterministic seeded train/test split of a snapshot.
    Split(SplitArgs),
    /// Train the baseline tagger-parser on a CoNLL-U file.
    Train(TrainArgs),
    /// Tag and parse sentences with a trained model.
    Parse(ParseArgs),
    /// Score a prediction against gold (UPOS, DEPREL F1, UAS, LAS).
    Score(ScoreArgs),
    /// Compare two score reports metric by metric.
    Diff(DiffArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// CoNLL-U file to check.
    file: PathBuf,
    /// Full tree checking (default).
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Only resolvable heads and well-formed rows are errors.
    #[arg(long)]
    lenient: bool,
    /// Annotation schema (TOML) for tag and label checks.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Raw OCR text file.
    file: PathBuf,
    /// Reconstructed text destination.
    #[arg(long)]
    out: PathBuf,
    /// Word list (one per line) gating split-word joins.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Skip the line-break dehyphenation rule.
    #[arg(long, action = ArgAction::SetTrue)]
    no_dehyphenate: bool,
    /// Skip the lexicon-gated split-word joins.
    #[arg(long, action = ArgAction::SetTrue)]
    no_join_words: bool,
    /// Skip boundary punctuation normalization.
    #[arg(long, action = ArgAction::SetTrue)]
    no_boundary_punct: bool,
    /// Also write the JSON report here.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// Newline-delimited JSON record stream.
    batch: PathBuf,
    /// Resumable ingestion state file (created if absent).
    #[arg(long)]
    state: PathBuf,
    /// Annotation schema (TOML).
    #[arg(long)]
    schema: PathBuf,
    /// CoNLL-U file the newly admitted sentences are appended to.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct RetryArgs {
    /// Newline-delimited JSON replacement records.
    replacements: PathBuf,
    /// Resumable ingestion state file.
    #[arg(long)]
    state: PathBuf,
    /// Annotation schema (TOML).
    #[arg(long)]
    schema: PathBuf,
    /// CoNLL-U file the newly admitted sentences are appended to.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct FreezeArgs {
    /// Annotation batch files, in corpus order (repeatable).
    #[arg(long = "batches", required = true)]
    batches: Vec<PathBuf>,
    /// Retry replacement file; every id must match a batch sentence.
    #[arg(long)]
    retries: Option<PathBuf>,
    /// Snapshot destination.
    #[arg(long)]
    out: PathBuf,
    /// Also write the manifest JSON here.
    #[arg(long)]
    manifest_out: Option<PathBuf>,
    /// Validate the snapshot leniently instead of strictly.
    #[arg(long)]
    lenient: bool,
    /// Annotation schema (TOML) for tag and label checks.
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    /// Snapshot to split.
    file: PathBuf,
    /// Shuffle seed.
    #[arg(long)]
    seed: u64,
    /// Test share, e.g. 0.2 or 1/5.
    #[arg(long)]
    test_fraction: String,
    /// Directory for train.conllu, test.conllu, and split.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the split manifest JSON here.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training treebank (CoNLL-U).
    #[arg(long)]
    train: PathBuf,
    /// Passes over the training data.
    #[arg(long, default_value_t = 10)]
    epochs: u32,
    /// Candidate-head window.
    #[arg(long, default_value_t = 16)]
    window: usize,
    /// Feature space size.
    #[arg(long, default_value_t = 1 << 20)]
    hash_dim: u32,
    /// Seed recorded in the model (training itself is deterministic).
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Model file destination.
    #[arg(long)]
    model_out: PathBuf,
}

#[derive(Args)]
struct ParseArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Input treebank; FORM is read, annotations are overwritten.
    #[arg(long = "in")]
    input: PathBuf,
    /// Annotated output destination.
    #[arg(long)]
    out: PathBuf,
    /// Force every output sentence to be a valid tree.
    #[arg(long, action = ArgAction::SetTrue)]
    repair_tree: bool,
}

#[derive(Args)]
struct ScoreArgs {
    /// Reference treebank.
    #[arg(long)]
    gold: PathBuf,
    /// System output, aligned with gold.
    #[arg(long)]
    pred: PathBuf,
    /// Also write the JSON report here.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct DiffArgs {
    /// Baseline report (JSON from `score`).
    #[arg(long)]
    a: PathBuf,
    /// Comparison report (JSON from `score`).
    #[arg(long)]
    b: PathBuf,
    /// Also write the JSON delta here.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("KATH_LOG")).init();
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("kath: error: {err:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Validate(args) => cmd_validate(args),
        Command::Reconstruct(args) => cmd_reconstruct(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Retry(args) => cmd_retry(args),
        Command::Freeze(args) => cmd_freeze(args),
        Command::Split(args) => cmd_split(args),
        Command::Train(args) => cmd_train(args),
        Command::Parse(args) => cmd_parse(args),
        Command::Score(args) => cmd_score(args),
        Command::Diff(args) => cmd_diff(args),
    }
}

/// Prints a report to stdout and mirrors it to `--report-out` when given.
fn emit_report(report: &serde_json::Value, report_out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    println!("{text}");
    if let Some(path) = report_out {
        std::fs::write(path, format!("{text}\n"))
            .with_context(|| format!("writing report to {}", path.display()))?;
    }
    Ok(())
}

fn load_optional_schema(path: Option<&Path>) -> Result<Option<AnnotationSchema>> {
    match path {
        None => Ok(None),
        Some(p) => Ok(Some(
            load_schema(p).with_context(|| format!("loading schema {}", p.display()))?,
        )),
    }
}

fn read_treebank(path: &Path, profile: Strictness) -> Result<Treebank> {
    Ok(parse_treebank_file(path, profile)
        .with_context(|| format!("reading {}", path.display()))?
        .treebank)
}

fn cmd_validate(args: ValidateArgs) -> Result<i32> {
    let profile = if args.lenient { Strictness::Lenient } else { Strictness::Strict };
    let schema = load_optional_schema(args.schema.as_deref())?;

    // parse leniently so malformed rows surface as issues, not parse aborts
    let parsed = parse_treebank_file(&args.file, Strictness::Lenient)
        .with_context(|| format!("reading {}", args.file.display()))?;
    let mut issues = parsed.issues;
    issues.extend(validate_treebank(&parsed.treebank, profile, schema.as_ref()));

    let error_count = issues.iter().filter(|i| i.severity == Severity::Error).count();
    let warning_count = issues.len() - error_count;
    let report = json!({
        "file": args.file.display().to_string(),
        "profile": profile,
        "sentences": parsed.treebank.len(),
        "error_count": error_count,
        "warning_count": warning_count,
        "issues": issues,
    });
    emit_report(&report, args.report_out.as_deref())?;
    Ok(if error_count > 0 { 1 } else { 0 })
}

fn cmd_reconstruct(args: ReconstructArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.file)
        .with_context(|| format!("reading {}", args.file.display()))?;
    let lexicon: Option<BTreeSet<String>> = match &args.lexicon {
        None => None,
        Some(path) => {
            let words = std::fs::read_to_string(path)
                .with_context(|| format!("reading lexicon {}", path.display()))?;
            Some(
                words
                    .lines()
                    .map(str::trim)
                    .filter(|w| !w.is_empty())
                    .map(str::to_string)
                    .collect(),
            )
        }
    };

    let cfg = ReconstructionConfig::default();
    let mut report = ReconstructionReport::default();
    let had_final_newline = text.ends_with('\n');
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();

    if !args.no_dehyphenate {
        let (next, r) = dehyphenate(&lines, &cfg);
        lines = next;
        report.merge(r);
    }
    if !args.no_join_words {
        let (next, r) = join_split_words(&lines, &cfg, lexicon.as_ref());
        lines = next;
        report.merge(r);
    }
    let mut out_text = lines.join("\n");
    if !args.no_boundary_punct {
        let (next, r) = normalize_boundary_punct(&out_text, &cfg);
        out_text = next;
        report.merge(r);
    }
    if had_final_newline && !out_text.ends_with('\n') {
        out_text.push('\n');
    }
    std::fs::write(&args.out, out_text)
        .with_context(|| format!("writing {}", args.out.display()))?;

    let report = serde_json::to_value(&report).expect("report serializes");
    emit_report(&report, args.report_out.as_deref())?;
    Ok(0)
}

/// Appends admitted sentences to a CoNLL-U file, creating it if needed.
fn append_sentences(path: &Path, sentences: &[kath_core::conllu::Sentence]) -> Result<()> {
    if sentences.is_empty() {
        return Ok(());
    }
    let tb = Treebank::new(sentences.to_vec());
    let chunk = serialize_treebank(&tb);
    let existing = if path.exists() {
        std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?
    } else {
        String::new()
    };
    std::fs::write(path, existing + &chunk)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<i32> {
    let schema = load_schema(&args.schema)
        .with_context(|| format!("loading schema {}", args.schema.display()))?;
    let input = std::fs::read_to_string(&args.batch)
        .with_context(|| format!("reading {}", args.batch.display()))?;
    let mut state = IngestState::load_or_default(&args.state)
        .with_context(|| format!("loading state {}", args.state.display()))?;

    let outcome = ingest_batch(&input, &schema, &mut state);
    state
        .save(&args.state)
        .with_context(|| format!("saving state {}", args.state.display()))?;
    if let Some(out) = &args.out {
        append_sentences(out, &outcome.admitted)?;
    }

    let report = json!({
        "admitted": outcome.admitted.iter().map(|s| s.sent_id.clone()).collect::<Vec<_>>(),
        "dead_letters": outcome.dead_letters,
        "retry_queue": state.retry_queue,
        "next_offset": state.next_offset,
        "total_admitted": state.admitted.len(),
    });
    emit_report(&report, args.report_out.as_deref())?;
    Ok(0)
}

fn cmd_retry(args: RetryArgs) -> Result<i32> {
    let schema = load_schema(&args.schema)
        .with_context(|| format!("loading schema {}", args.schema.display()))?;
    let input = std::fs::read_to_string(&args.replacements)
        .with_context(|| format!("reading {}", args.replacements.display()))?;
    let mut state = IngestState::load(&args.state)
        .with_context(|| format!("loading state {}", args.state.display()))?;

    let outcome = process_retries(&input, &schema, &mut state)?;
    state
        .save(&args.state)
        .with_context(|| format!("saving state {}", args.state.display()))?;
    if let Some(out) = &args.out {
        append_sentences(out, &outcome.admitted)?;
    }

    let report = json!({
        "admitted": outcome.admitted.iter().map(|s| s.sent_id.clone()).collect::<Vec<_>>(),
        "dead_letters": outcome.dead_letters,
        "retry_queue": state.retry_queue,
        "next_offset": state.next_offset,
        "total_admitted": state.admitted.len(),
    });
    emit_report(&report, args.report_out.as_deref())?;
    Ok(0)
}

fn cmd_freeze(args: FreezeArgs) -> Result<i32> {
    let profile = if args.lenient { Strictness::Lenient } else { Strictness::Strict };
    let schema = load_optional_schema(args.schema.as_deref())?;

    let mut batches = Vec::new();
    for path in &args.batches {
        batches.push(read_treebank(path, Strictness::Lenient)?);
    }
    let retries = match &args.retries {
        Some(path) => read_treebank(path, Strictness::Lenient)?,
        None => Treebank::new(Vec::new()),
    };

    let (snapshot, manifest) = freeze(&batches, &retries, profile, schema.as_ref())?;
    std::fs::write(&args.out, serialize_treebank(&snapshot))
        .with_context(|| format!("writing {}", args.out.display()))?;

    let report = serde_json::to_value(&manifest).expect("manifest serializes");
    emit_report(&report, args.manifest_out.as_deref())?;
    Ok(0)
}

fn cmd_split(args: SplitArgs) -> Result<i32> {
    let fraction: Fraction = args.test_fraction.parse()?;
    let tb = read_treebank(&args.file, Strictness::Lenient)?;
    let manifest = deterministic_split(&tb, args.seed, fraction)?;

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))?;
        let train_set: BTreeSet<&str> = manifest.train_ids.iter().map(String::as_str).collect();
        let (train_sents, test_sents): (Vec<_>, Vec<_>) = tb
            .sentences
            .iter()
            .cloned()
            .partition(|s| train_set.contains(s.sent_id.as_str()));
        std::fs::write(dir.join("train.conllu"), serialize_treebank(&Treebank::new(train_sents)))?;
        std::fs::write(dir.join("test.conllu"), serialize_treebank(&Treebank::new(test_sents)))?;
        let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(dir.join("split.json"), format!("{manifest_json}\n"))?;
    }

    let report = serde_json::to_value(&manifest).expect("manifest serializes");
    emit_report(&report, args.report_out.as_deref())?;
    Ok(0)
}

fn cmd_train(args: TrainArgs) -> Result<i32> {
    let tb = read_treebank(&args.train, Strictness::Lenient)?;
    let config = TrainConfig {
        window: args.window,
        hash_dim: args.hash_dim,
        epochs: args.epochs,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let model: kath_core::ParserModel = train(&tb, &config)?;
    save_model(&model, &args.model_out)
        .with_context(|| format!("writing model {}", args.model_out.display()))?;

    let report = json!({
        "model": args.model_out.display().to_string(),
        "sentences": tb.len(),
        "epochs": config.epochs,
        "window": config.window,
        "hash_dim": config.hash_dim,
        "upos_classes": model.tagger.class_labels.len(),
        "deprel_classes": model.labeler.class_labels.len(),
    });
    emit_report(&report, None)?;
    Ok(0)
}

fn cmd_parse(args: ParseArgs) -> Result<i32> {
    let model: kath_core::ParserModel = load_model(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let tb = read_treebank(&args.input, Strictness::Lenient)?;

    let sentences: Vec<_> = tb
        .sentences
        .iter()
        .map(|s| {
            let predicted = predict_sentence(&model, s);
            if args.repair_tree {
                repair_tree(&predicted)
            } else {
                predicted
            }
        })
        .collect();
    let count = sentences.len();
    std::fs::write(&args.out, serialize_treebank(&Treebank::new(sentences)))
        .with_context(|| format!("writing {}", args.out.display()))?;

    let report = json!({
        "model": args.model.display().to_string(),
        "sentences": count,
        "out": args.out.display().to_string(),
        "repaired": args.repair_tree,
    });
    emit_report(&report, None)?;
    Ok(0)
}

fn cmd_score(args: ScoreArgs) -> Result<i32> {
    let gold = read_treebank(&args.gold, Strictness::Lenient)?;
    let pred = read_treebank(&args.pred, Strictness::Lenient)?;
    let alignment = check_alignment(&gold, &pred)?;
    let report: EvalReport = evaluate(&alignment, &MetricsOptions::default())?;

    let report = serde_json::to_value(&report).expect("report serializes");
    emit_report(&report, args.report_out.as_deref())?;
    Ok(0)
}

fn cmd_diff(args: DiffArgs) -> Result<i32> {
    let read_report = |path: &Path| -> Result<EvalReport> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading report {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("{} is not a score report", path.display()))
    };
    let a = read_report(&args.a)?;
    let b = read_report(&args.b)?;
    let delta = diff_reports(&a, &b);

    let report = serde_json::to_value(&delta).expect("delta serializes");
    emit_report(&report, args.report_out.as_deref())?;
    Ok(0)
}
