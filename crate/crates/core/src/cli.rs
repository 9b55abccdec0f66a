//! Command-line front end: `estimate-priors`, `simulate`, `analyze`, `validate`.
//!
//! Exit codes: 0 success, 1 a `validate` oracle failed, 2 config or usage
//! error, 3 numeric failure, 4 I/O failure.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::analysis::{
    consistency, group_trajectories, paired_wilcoxon, parse_plot_csv, plot_csv, polarity_mae,
    ConsistencyReport, Grouping, SentimentSeries, TestResult,
};
use crate::engine::{
    read_jsonl, run_to_dir, write_json_atomic, write_text_atomic, PolicyKind, RunSummary,
    SimConfig, TrajectoryRecord, SUMMARY_FILE,
};
use crate::error::{Error, Result};
use crate::policy::EmotionLexicon;
use crate::priors::{
    estimate_priors, ingest_corpus, prior_report, PriorTable, DEFAULT_QUANT_EPSILON,
    DEFAULT_SMOOTHING_ALPHA,
};
use crate::types::Vocabulary;
use crate::validation::run_oracles;

#[derive(Debug, Parser)]
#[command(
    name = "typecast",
    version,
    about = "Personality-typed agent simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate per-type emotion priors from an annotated JSONL corpus.
    EstimatePriors(EstimateArgs),
    /// Run a simulation from a JSON config.
    Simulate(SimulateArgs),
    /// Compute metrics and plot data from a trajectory log.
    Analyze(AnalyzeArgs),
    /// Run the built-in numerical oracle suite.
    Validate,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output prior table (JSON). The report goes next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING_ALPHA)]
    pub alpha: f64,
    /// Grid spacing for quantization; 0 disables it.
    #[arg(long, default_value_t = DEFAULT_QUANT_EPSILON)]
    pub quant: f64,
    /// JSON array of emotion labels (default: the six built-in labels).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// stochastic | scripted | remote
    #[arg(long)]
    pub policy: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub traj: PathBuf,
    /// Run summary with each agent's μ (default: summary.json beside the trajectory).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Reference: a plot CSV (t,group,mean_sentiment) or a trajectory JSONL.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// Simulation config supplying the vocabulary and lexicon (default: built-in).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated: mae, consistency, wilcoxon.
    #[arg(long, value_delimiter = ',', default_value = "consistency")]
    pub metrics: Vec<String>,
    /// all | type | axis | axis:TF[,EI...]
    #[arg(long = "group-by", default_value = "all")]
    pub group_by: String,
    /// Output directory for metrics.json and plot.csv.
    #[arg(long)]
    pub out: PathBuf,
}

fn digest_of(value: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Run a parsed invocation; returns the process exit code for non-error outcomes.
pub fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::EstimatePriors(args) => estimate(args).map(|_| 0),
        Command::Simulate(args) => simulate(args).map(|_| 0),
        Command::Analyze(args) => analyze(args).map(|_| 0),
        Command::Validate => {
            println!("config digest: builtin");
            let report = run_oracles();
            print!("{}", report.to_text());
            Ok(if report.all_passed() { 0 } else { 1 })
        }
    }
}

fn companion(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "priors".into());
    out.with_file_name(format!("{stem}{suffix}"))
}

fn estimate(args: EstimateArgs) -> Result<PriorTable> {
    let vocab = match &args.vocab {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let labels: Vec<String> = serde_json::from_str(&text)
                .map_err(|e| Error::config(format!("{}: {e}", p.display())))?;
            Vocabulary::new(labels)?
        }
        None => Vocabulary::default(),
    };
    if !(args.alpha.is_finite() && args.alpha > 0.0) {
        return Err(Error::config(format!(
            "--alpha must be positive, got {}",
            args.alpha
        )));
    }
    if !(args.quant == 0.0 || (args.quant > 0.0 && args.quant < 1.0)) {
        return Err(Error::config(format!(
            "--quant must be 0 or in (0, 1), got {}",
            args.quant
        )));
    }
    let digest = digest_of(&json!({
        "corpus_sha256": file_digest(&args.corpus)?,
        "alpha": args.alpha,
        "quant": args.quant,
        "vocabulary": vocab.labels(),
    }));
    println!("config digest: {digest}");
    let file = fs::File::open(&args.corpus).map_err(|e| Error::io(&args.corpus, e))?;
    let corpus = ingest_corpus(BufReader::new(file), &vocab)?;
    for r in &corpus.rejects {
        log::warn!("{}:{}: {}", args.corpus.display(), r.line, r.reason);
    }
    if corpus.is_empty() {
        eprintln!("warning: corpus has no usable records; every type gets the uniform prior");
    }
    let mut table = estimate_priors(&corpus, args.alpha)?;
    if args.quant > 0.0 {
        table = table.quantized(args.quant)?;
    }
    let mut report = prior_report(&table, &vocab);
    report.rejects = corpus.rejects.clone();
    write_text_atomic(&args.out, &(table.to_json_pretty() + "\n"))?;
    write_json_atomic(&companion(&args.out, ".report.json"), &report)?;
    write_text_atomic(&companion(&args.out, ".report.txt"), &report.to_text())?;
    print!("{}", report.to_text());
    Ok(table)
}

fn simulate(args: SimulateArgs) -> Result<RunSummary> {
    let mut config = SimConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(p) = &args.policy {
        config.policy = p.parse::<PolicyKind>()?;
    }
    config.validate()?;
    println!("config digest: {}", config.digest());
    let summary = run_to_dir(config, &args.out)?;
    println!(
        "{} steps, {} agents, {} messages, {} incidents -> {}",
        summary.steps,
        summary.agents.len(),
        summary.total_messages,
        summary.incidents,
        args.out.display()
    );
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct GroupMetric<T> {
    group: String,
    value: T,
}

#[derive(Debug, Default, Serialize)]
struct Metrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    mae: Option<Vec<GroupMetric<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mae_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wilcoxon: Option<Vec<GroupMetric<TestResult>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    consistency: Option<ConsistencyReport>,
}

fn load_reference(
    path: &Path,
    grouping: &Grouping,
    lexicon: &EmotionLexicon,
) -> Result<Vec<SentimentSeries>> {
    if path.extension().is_some_and(|e| e == "csv") {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_plot_csv(&text)
    } else {
        let records: Vec<TrajectoryRecord> = read_jsonl(path)?;
        group_trajectories(&records, grouping, lexicon)
    }
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let grouping: Grouping = args.group_by.parse()?;
    let metrics: Vec<String> = args
        .metrics
        .iter()
        .map(|m| m.trim().to_ascii_lowercase())
        .collect();
    if let Some(bad) = metrics
        .iter()
        .find(|m| !matches!(m.as_str(), "mae" | "consistency" | "wilcoxon"))
    {
        return Err(Error::config(format!(
            "unknown metric {bad:?} (mae, consistency, wilcoxon)"
        )));
    }
    let needs_ref = metrics.iter().any(|m| m == "mae" || m == "wilcoxon");
    if needs_ref && args.reference.is_none() {
        return Err(Error::config(
            "--ref is required for the mae and wilcoxon metrics",
        ));
    }
    let lexicon = match &args.config {
        Some(p) => {
            let cfg = SimConfig::load(p)?;
            cfg.lexicon(&cfg.vocabulary()?)?
        }
        None => EmotionLexicon::default(),
    };
    let digest = digest_of(&json!({
        "traj_sha256": file_digest(&args.traj)?,
        "ref_sha256": args.reference.as_deref().map(file_digest).transpose()?,
        "metrics": metrics,
        "group_by": args.group_by,
        "lexicon": lexicon,
    }));
    println!("config digest: {digest}");

    let records: Vec<TrajectoryRecord> = read_jsonl(&args.traj)?;
    let series = group_trajectories(&records, &grouping, &lexicon)?;
    let mut out = Metrics::default();

    if let Some(ref_path) = args.reference.as_deref().filter(|_| needs_ref) {
        let reference = load_reference(ref_path, &grouping, &lexicon)?;
        let pairs: Vec<(&SentimentSeries, &SentimentSeries)> = series
            .iter()
            .filter_map(|s| {
                reference
                    .iter()
                    .find(|r| r.group == s.group)
                    .map(|r| (s, r))
            })
            .collect();
        if pairs.is_empty() {
            return Err(Error::domain(
                "reference shares no group with the trajectory",
            ));
        }
        if metrics.iter().any(|m| m == "mae") {
            let values = pairs
                .iter()
                .map(|(s, r)| {
                    Ok(GroupMetric {
                        group: s.group.clone(),
                        value: polarity_mae(s, r)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            out.mae_mean = Some(values.iter().map(|g| g.value).sum::<f64>() / values.len() as f64);
            out.mae = Some(values);
        }
        if metrics.iter().any(|m| m == "wilcoxon") {
            out.wilcoxon = Some(
                pairs
                    .iter()
                    .map(|(s, r)| {
                        Ok(GroupMetric {
                            group: s.group.clone(),
                            value: paired_wilcoxon(s, r)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
        }
    }

    if metrics.iter().any(|m| m == "consistency") {
        let summary_path = args
            .summary
            .clone()
            .unwrap_or_else(|| args.traj.with_file_name(SUMMARY_FILE));
        let summary: Option<RunSummary> = if summary_path.exists() {
            let text =
                fs::read_to_string(&summary_path).map_err(|e| Error::io(&summary_path, e))?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| Error::config(format!("{}: {e}", summary_path.display())))?,
            )
        } else {
            log::warn!(
                "no run summary at {}; using the shipped priors as baselines",
                summary_path.display()
            );
            None
        };
        let shipped = PriorTable::shipped();
        out.consistency = Some(consistency(&records, |id, mbti| match &summary {
            Some(s) => s.agent(id.as_str()).map(|a| a.mu.clone()),
            None => shipped.distribution(mbti).map(<[f64]>::to_vec),
        })?);
    }

    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_json_atomic(&args.out.join("metrics.json"), &out)?;
    write_text_atomic(&args.out.join("plot.csv"), &plot_csv(&series))?;
    if let Some(m) = out.mae_mean {
        println!("mae: {m:.6}");
    }
    if let Some(c) = &out.consistency {
        println!(
            "consistency: mean rho {:.4} over {} agents",
            c.mean_rho, c.defined
        );
    }
    println!("{} series -> {}", series.len(), args.out.display());
    Ok(())
}
