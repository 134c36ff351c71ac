//! Command line.
//!
//! Exit codes: 0 success, 1 the command failed (bad input, I/O), 2 usage
//! error. Relative input paths and image refs are resolved against
//! `MEDBENCH_DATA_ROOT` when it is set.

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use medbench_core::corpus::{build_registry, Split, TaskSpec};
use medbench_core::humeval::{
    latest_annotations, latest_rankings, ranking_summary, rate_table, rate_with_ci, EvalCase, IndependentRecord,
    RankingRecord, RateFilter, DEFAULT_LEVEL, DEFAULT_RESAMPLES,
};
use medbench_core::mixture::FillRule;
use serde::Serialize;

use crate::evaluate::Prediction;
use crate::fsio::{read_jsonl, resolve, write_json, DATA_ROOT_VAR};
use crate::manifest::{load_manifest, load_tasks};
use crate::pipeline::{evaluate_split, placeholder_samples, prepare, write_batches, write_prompts, PrepareOptions};
use crate::service::{self, AppState, RecordStore};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "medbench",
    version,
    about = "Biomedical multitask benchmark harness",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Section reports, conform images, rebalance and augment; writes a new manifest.
    Prepare(PrepareArgs),
    /// Render prompts for one split.
    Prompt(PromptArgs),
    /// Draw training batches from the task mixture.
    Sample(SampleArgs),
    /// Score predictions for one task.
    Evaluate(EvaluateArgs),
    /// Serve the rater API.
    HumevalServe(ServeArgs),
    /// Ranking summary and error/omission rates from record files.
    HumevalAnalyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
struct TaskFile {
    /// JSON array of task specs; the built-in tasks when absent.
    #[arg(long)]
    tasks: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PrepareArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    tasks: TaskFile,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Augmented copies per eligible training sample.
    #[arg(long, default_value_t = 0)]
    augment_copies: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Validation,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Validation => Split::Validation,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Args)]
struct PromptArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    tasks: TaskFile,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Restrict to these tasks (repeatable).
    #[arg(long = "task")]
    task: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FillArg {
    Residual,
    Proportional,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Draw sample ids from this manifest's training split. Without it,
    /// batches hold per-task counts only.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    tasks: TaskFile,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    batches: usize,
    #[arg(long, default_value_t = 128)]
    batch_size: usize,
    #[arg(long, value_enum, default_value = "residual")]
    fill: FillArg,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// JSON lines of {sample_id, prediction, option_scores?}.
    #[arg(long)]
    preds: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    task: String,
    #[command(flatten)]
    tasks: TaskFile,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// JSON lines of evaluation cases.
    #[arg(long)]
    cases: PathBuf,
    /// Directory holding the record logs.
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Comma-separated rater ids.
    #[arg(long, value_delimiter = ',', required = true)]
    raters: Vec<String>,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[arg(long, default_value_t = 8080)]
    port: u16,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    rankings: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
    resamples: usize,
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    level: f64,
    /// One rate filter, e.g. `clinical-errors`; all six when absent.
    #[arg(long)]
    filter: Option<String>,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn data_root() -> Option<PathBuf> {
    std::env::var_os(DATA_ROOT_VAR).map(PathBuf::from)
}

fn tasks(t: &TaskFile) -> Result<Vec<TaskSpec>, Error> {
    load_tasks(t.tasks.as_deref().map(resolve).as_deref())
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Error> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Prepare(a) => {
            let specs = tasks(&a.tasks)?;
            let samples = load_manifest(&resolve(&a.manifest), &specs)?;
            let opts = PrepareOptions {
                seed: a.seed,
                augment_copies: a.augment_copies,
                data_root: data_root(),
            };
            let report = prepare(samples, &specs, &a.out, &opts)?;
            log::info!("prepared {} of {} samples", report.output_samples, report.input_samples);
            Ok(())
        }
        Command::Prompt(a) => {
            let specs = tasks(&a.tasks)?;
            let samples = load_manifest(&resolve(&a.manifest), &specs)?;
            let registry = build_registry(specs, samples)?;
            let n = write_prompts(&registry, a.split.into(), &a.task, a.seed, &a.out)?;
            log::info!("wrote {n} prompts");
            Ok(())
        }
        Command::Sample(a) => {
            let specs = tasks(&a.tasks)?;
            let (samples, task_level) = match &a.manifest {
                Some(m) => (load_manifest(&resolve(m), &specs)?, false),
                None => (placeholder_samples(&specs), true),
            };
            let registry = build_registry(specs, samples)?;
            let fill = match a.fill {
                FillArg::Residual => FillRule::Residual,
                FillArg::Proportional => FillRule::Proportional,
            };
            write_batches(&registry, a.batch_size, a.batches, a.seed, fill, task_level, &a.out)?;
            Ok(())
        }
        Command::Evaluate(a) => {
            let specs = tasks(&a.tasks)?;
            let samples = load_manifest(&resolve(&a.manifest), &specs)?;
            let preds: Vec<Prediction> = read_jsonl(&resolve(&a.preds))?;
            let registry = build_registry(specs, samples)?;
            let report = evaluate_split(&registry, &a.task, a.split.into(), &preds)?;
            emit(a.out.as_deref(), &report)
        }
        Command::HumevalServe(a) => {
            let cases: Vec<EvalCase> = read_jsonl(&resolve(&a.cases))?;
            let state = AppState::new(cases, a.raters, a.seed, RecordStore::open(&a.store)?)?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::Invalid(format!("runtime: {e}")))?;
            runtime.block_on(service::serve(state, SocketAddr::new(a.host, a.port)))
        }
        Command::HumevalAnalyze(a) => analyze(a),
    }
}

#[derive(Debug, Serialize)]
struct Analysis {
    #[serde(skip_serializing_if = "Option::is_none")]
    ranking: Option<medbench_core::humeval::RankingSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rates: Option<std::collections::BTreeMap<medbench_core::humeval::Arm, Vec<medbench_core::humeval::RateEstimate>>>,
}

fn analyze(a: AnalyzeArgs) -> Result<(), Error> {
    if a.rankings.is_none() && a.annotations.is_none() {
        return Err(Error::Invalid(
            "nothing to analyze: pass --rankings and/or --annotations".into(),
        ));
    }
    let filter = match a.filter.as_deref() {
        None => None,
        Some(f) => Some(RateFilter::parse(f).ok_or_else(|| Error::Invalid(format!("unknown filter `{f}`")))?),
    };
    let ranking = match &a.rankings {
        None => None,
        Some(p) => {
            let records: Vec<RankingRecord> = read_jsonl(&resolve(p))?;
            Some(ranking_summary(&latest_rankings(records))?)
        }
    };
    let rates = match &a.annotations {
        None => None,
        Some(p) => {
            let records: Vec<IndependentRecord> = latest_annotations(read_jsonl(&resolve(p))?);
            Some(match filter {
                None => rate_table(&records, a.resamples, a.level, a.seed)?,
                Some(f) => {
                    let mut by_arm: std::collections::BTreeMap<_, Vec<IndependentRecord>> = Default::default();
                    for r in records {
                        by_arm.entry(r.arm).or_default().push(r);
                    }
                    by_arm
                        .into_iter()
                        .map(|(arm, rs)| Ok((arm, vec![rate_with_ci(&rs, f, a.resamples, a.level, a.seed)?])))
                        .collect::<Result<_, Error>>()?
                }
            })
        }
    };
    emit(a.out.as_deref(), &Analysis { ranking, rates })
}
