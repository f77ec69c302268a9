//! The `summact` command line.
//!
//! Exit status: 0 success, 1 usage error, 2 data error, 3 backend error.

use std::collections::HashMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::adapters::{self, Adapter};
use super::{run_full_pipeline, to_jsonl, write_pipeline_outputs, RunConfig};
use crate::action_model::{read_traces, render_trace, Trace, TraceError};
use crate::backends::{Backend, BackendError, BackendKind, TextGenerator};
use crate::exec::Execution;
use crate::metrics::{evaluate_summaries, MetricsError};
use crate::next_action::{
    evaluate_predictions, extract_candidates, predict_next, read_page, NextActionError, NextOperation, PredictionRecord,
};
use crate::prompting::{
    build_subgoal_prompt, build_summary_prompt, default_icl_examples, extract_summary, load_icl_examples,
    parse_subgoal_response, IclExample, PromptError, SubGoal, SubGoalAssignment, FALLBACK_SUBGOAL_LABEL,
};
use crate::retrieval::{build_index, load_index, query, save_index, RetrievalError};
use crate::synonyms::{build_report, mine_synonyms, summarise_windows, SynonymError};
use crate::toy_lm::{
    benchmark_train_config, detail_recall, save_checkpoint, synthetic_corpus, train, SyntheticSpec, ToyLmError,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Backend(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Backend(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Backend(m) => m,
        }
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Backend(e.to_string()),
        }
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PromptError> for CliError {
    fn from(e: PromptError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ToyLmError> for CliError {
    fn from(e: ToyLmError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Backend { .. } => CliError::Backend(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<NextActionError> for CliError {
    fn from(e: NextActionError) -> Self {
        match e {
            NextActionError::Backend(b) => b.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SynonymError> for CliError {
    fn from(e: SynonymError) -> Self {
        match e {
            SynonymError::Backend(b) => b.into(),
            SynonymError::Metrics(m) => m.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::Backend(b) => b.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Mock,
    Http,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AdapterArg {
    Mind2web,
    Motif,
}

#[derive(Debug, Parser)]
#[command(name = "summact", version, about = "Summarise UI interaction traces into intentions")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long, global = true)]
    base_url: Option<String>,
    /// JSON list of {"trigger", "response"} rules for the mock backend.
    #[arg(long, global = true)]
    mock_rules: Option<PathBuf>,
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    max_concurrent: Option<usize>,
    /// Run data-parallel loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Repeat for more log output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a raw dataset export to canonical trace JSONL.
    Ingest {
        #[arg(long, value_enum)]
        adapter: AdapterArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render each trace's actions as sentences.
    Template {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate sub-goals for each trace.
    Subgoals {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        icl_examples: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarise traces given their sub-goals.
    Summarise {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        subgoals: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted summaries against gold intentions, paired by line.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Predict the next action for each sample.
    PredictNext {
        #[arg(long)]
        samples: PathBuf,
        /// Directory holding one `<page_id>.json` per page.
        #[arg(long)]
        pages: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Mine behaviour synonyms across trace windows.
    Synonyms {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Build or query a summary index.
    Index {
        #[command(subcommand)]
        command: IndexCommand,
    },
    /// Train the toy model on the synthetic corpus and report detail recall.
    TrainToy {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value_t = 300)]
        pairs: usize,
        #[arg(long, default_value_t = 100)]
        eval_pairs: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Sub-goals, summaries and metrics for a trace file.
    Pipeline {
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long)]
        icl_examples: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        no_timestamps: bool,
    },
}

#[derive(Debug, Subcommand)]
enum IndexCommand {
    Build {
        /// Summary JSONL with `trace_id` and `summary` fields.
        #[arg(long)]
        summaries: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        text: String,
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

fn load_traces(path: &Path) -> Result<Vec<Trace>, CliError> {
    let traces = read_traces(path)?;
    if traces.is_empty() {
        return Err(CliError::Data(format!("{}: no traces", path.display())));
    }
    Ok(traces)
}

fn load_examples(path: Option<&Path>) -> Result<Vec<IclExample>, CliError> {
    match path {
        Some(p) => Ok(load_icl_examples(p)?),
        None => Ok(default_icl_examples()),
    }
}

#[derive(Serialize)]
struct RenderedLine<'a> {
    trace_id: &'a str,
    actions: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct SubgoalLine {
    trace_id: String,
    subgoals: Vec<SubGoal>,
    #[serde(default)]
    fallback: bool,
}

#[derive(Serialize, Deserialize)]
struct SummaryRecord {
    trace_id: String,
    summary: String,
}

#[derive(Deserialize)]
struct TextLine {
    summary: Option<String>,
    gold_intention: Option<String>,
    text: Option<String>,
}

impl TextLine {
    fn value(self, prefer_gold: bool) -> Option<String> {
        if prefer_gold {
            self.gold_intention.or(self.summary).or(self.text)
        } else {
            self.summary.or(self.text).or(self.gold_intention)
        }
    }
}

#[derive(Deserialize)]
struct GoldAction {
    element_id: String,
    operation: NextOperation,
}

#[derive(Deserialize)]
struct NextActionSample {
    sample_id: String,
    page_id: String,
    history: Vec<String>,
    summary: String,
    gold: Option<GoldAction>,
}

#[derive(Serialize)]
struct ToyReport {
    lambda: f64,
    seed: u64,
    epochs: usize,
    train_pairs: usize,
    eval_pairs: usize,
    loss_history: Vec<f64>,
    detail_recall: f64,
}

struct Context {
    cfg: RunConfig,
    exec: Execution,
}

impl Context {
    fn backend(&self) -> Result<Backend, CliError> {
        Ok(Backend::from_config(&self.cfg.backend)?)
    }
}

fn build_context(cli: &Cli) -> Result<Context, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(CliError::Usage)?,
        None => RunConfig::default(),
    };
    if let Some(b) = cli.backend {
        cfg.backend.kind = match b {
            BackendArg::Mock => BackendKind::Mock,
            BackendArg::Http => BackendKind::Http,
        };
    }
    if let Some(u) = &cli.base_url {
        cfg.backend.base_url = Some(u.clone());
    }
    if let Some(r) = &cli.mock_rules {
        cfg.backend.mock_rules = Some(r.clone());
    }
    if let Some(m) = &cli.model {
        cfg.backend.model = m.clone();
        cfg.generation.model_name = m.clone();
    }
    if let Some(n) = cli.max_concurrent {
        cfg.backend.max_concurrent = n;
    }
    match &cli.command {
        Command::Synonyms { theta: Some(t), .. } => cfg.theta = *t,
        Command::PredictNext { k: Some(k), .. } => cfg.k = *k,
        Command::TrainToy { lambda, seed, .. } => {
            if let Some(l) = lambda {
                cfg.lambda = *l;
            }
            if let Some(s) = seed {
                cfg.seed = *s;
            }
        }
        Command::Pipeline {
            traces,
            icl_examples,
            out_dir,
            lambda,
            no_timestamps,
        } => {
            if traces.is_some() {
                cfg.paths.traces = traces.clone();
            }
            if icl_examples.is_some() {
                cfg.paths.icl_examples = icl_examples.clone();
            }
            if out_dir.is_some() {
                cfg.paths.out_dir = out_dir.clone();
            }
            if let Some(l) = lambda {
                cfg.lambda = *l;
            }
            if *no_timestamps {
                cfg.timestamps = false;
            }
        }
        _ => {}
    }
    cfg.validate().map_err(CliError::Usage)?;
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    Ok(Context { cfg, exec })
}

fn subgoals_for(
    trace: &Trace,
    examples: &[IclExample],
    generator: &dyn TextGenerator,
    ctx: &Context,
) -> Result<(SubGoalAssignment, bool), CliError> {
    let prompt = build_subgoal_prompt(trace, examples)?;
    let response = generator.generate(&prompt, &ctx.cfg.generation)?;
    Ok(match parse_subgoal_response(&response, trace.len()) {
        Ok(s) => (s, false),
        Err(e) => {
            log::warn!("{}: {e}; using a single sub-goal", trace.trace_id);
            (SubGoalAssignment::single(trace.len(), FALLBACK_SUBGOAL_LABEL), true)
        }
    })
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let ctx = build_context(&cli)?;
    match cli.command {
        Command::Ingest { adapter, input, out } => {
            let text =
                std::fs::read_to_string(&input).map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?;
            let records =
                adapters::raw_records(&text).map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?;
            let adapter = match adapter {
                AdapterArg::Mind2web => Adapter::Mind2Web,
                AdapterArg::Motif => Adapter::Motif,
            };
            let (traces, report) = adapters::convert(adapter, &records);
            for (reason, n) in &report.skipped {
                log::warn!("skipped {n} record(s): {reason}");
            }
            eprintln!(
                "converted {} record(s), skipped {}",
                report.converted,
                report.skipped_total()
            );
            let lines: String = traces.iter().map(|t| t.to_json_line() + "\n").collect();
            write_file(&out, lines)
        }
        Command::Template { traces, out } => {
            let traces = load_traces(&traces)?;
            let lines: Vec<RenderedLine> = traces
                .iter()
                .map(|t| RenderedLine {
                    trace_id: &t.trace_id,
                    actions: render_trace(t),
                })
                .collect();
            write_file(&out, to_jsonl(&lines))
        }
        Command::Subgoals {
            traces,
            icl_examples,
            out,
        } => {
            let traces = load_traces(&traces)?;
            let examples = load_examples(icl_examples.as_deref())?;
            let backend = ctx.backend()?;
            let results = ctx.exec.map(&traces, |t| subgoals_for(t, &examples, &backend, &ctx));
            let mut lines = Vec::with_capacity(traces.len());
            for (t, r) in traces.iter().zip(results) {
                let (s, fallback) = r?;
                lines.push(SubgoalLine {
                    trace_id: t.trace_id.clone(),
                    subgoals: s.entries,
                    fallback,
                });
            }
            write_file(&out, to_jsonl(&lines))
        }
        Command::Summarise { traces, subgoals, out } => {
            let traces = load_traces(&traces)?;
            let lines: Vec<SubgoalLine> = read_jsonl(&subgoals)?;
            let by_id: HashMap<&str, &SubgoalLine> = lines.iter().map(|l| (l.trace_id.as_str(), l)).collect();
            let backend = ctx.backend()?;
            let results = ctx.exec.map(&traces, |t| -> Result<SummaryRecord, CliError> {
                let line = by_id.get(t.trace_id.as_str()).ok_or_else(|| {
                    CliError::Data(format!("{}: no sub-goals for trace {}", subgoals.display(), t.trace_id))
                })?;
                let assignment = SubGoalAssignment {
                    entries: line.subgoals.clone(),
                };
                let prompt = build_summary_prompt(t, &assignment)
                    .map_err(|e| CliError::Data(format!("trace {}: {e}", t.trace_id)))?;
                let response = backend.generate(&prompt, &ctx.cfg.generation)?;
                Ok(SummaryRecord {
                    trace_id: t.trace_id.clone(),
                    summary: extract_summary(&response)
                        .map_err(|e| CliError::Backend(format!("trace {}: {e}", t.trace_id)))?,
                })
            });
            let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
            write_file(&out, to_jsonl(&records))
        }
        Command::Evaluate {
            pred,
            gold,
            out,
            csv,
            split,
        } => {
            let preds: Vec<TextLine> = read_jsonl(&pred)?;
            let golds: Vec<TextLine> = read_jsonl(&gold)?;
            if preds.len() != golds.len() {
                return Err(CliError::Data(format!(
                    "{} has {} predictions but {} has {} gold lines",
                    pred.display(),
                    preds.len(),
                    gold.display(),
                    golds.len()
                )));
            }
            let mut pairs = Vec::with_capacity(preds.len());
            for (i, (p, g)) in preds.into_iter().zip(golds).enumerate() {
                let p = p
                    .value(false)
                    .ok_or_else(|| CliError::Data(format!("{}:{}: no summary", pred.display(), i + 1)))?;
                let g = g
                    .value(true)
                    .ok_or_else(|| CliError::Data(format!("{}:{}: no gold text", gold.display(), i + 1)))?;
                pairs.push((p, g));
            }
            let backend = ctx.backend()?;
            let report = evaluate_summaries(&pairs, &backend, &split, ctx.exec)?;
            write_file(&out, report.to_json_pretty() + "\n")?;
            if let Some(csv) = csv {
                report.write_csv(&csv)?;
            }
            Ok(())
        }
        Command::PredictNext {
            samples,
            pages,
            out,
            metrics,
            ..
        } => {
            let samples: Vec<NextActionSample> = read_jsonl(&samples)?;
            if samples.is_empty() {
                return Err(CliError::Data("no samples".into()));
            }
            let mut page_cache = HashMap::new();
            for s in &samples {
                if !page_cache.contains_key(&s.page_id) {
                    let page = read_page(&pages.join(format!("{}.json", s.page_id)))?;
                    page_cache.insert(s.page_id.clone(), page);
                }
            }
            let backend = ctx.backend()?;
            let results = ctx.exec.map(&samples, |s| -> Result<PredictionRecord, CliError> {
                let page = &page_cache[&s.page_id];
                let candidates = extract_candidates(&page.elements, &s.history, &s.summary, ctx.cfg.k)
                    .map_err(|e| CliError::Data(format!("sample {}: {e}", s.sample_id)))?;
                let p = predict_next(&s.history, &s.summary, &candidates, &backend, &ctx.cfg.generation)?;
                Ok(PredictionRecord {
                    sample_id: s.sample_id.clone(),
                    element_id: p.element_id,
                    operation: p.operation,
                    degraded: p.degraded,
                })
            });
            let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
            write_file(&out, to_jsonl(&records))?;
            if let Some(path) = metrics {
                let mut golds = Vec::with_capacity(samples.len());
                for s in &samples {
                    let g = s
                        .gold
                        .as_ref()
                        .ok_or_else(|| CliError::Data(format!("sample {} has no gold label", s.sample_id)))?;
                    golds.push((g.element_id.clone(), g.operation));
                }
                let preds: Vec<_> = records
                    .iter()
                    .map(|r| crate::next_action::NextActionPrediction {
                        element_id: r.element_id.clone(),
                        operation: r.operation,
                        degraded: r.degraded,
                    })
                    .collect();
                let scores = evaluate_predictions(&preds, &golds)?;
                write_file(
                    &path,
                    serde_json::to_string_pretty(&scores).expect("serialisable") + "\n",
                )?;
            }
            Ok(())
        }
        Command::Synonyms { traces, out, .. } => {
            let traces = load_traces(&traces)?;
            let backend = ctx.backend()?;
            let subs = summarise_windows(&traces, &backend, &backend, &ctx.cfg.generation, ctx.exec)?;
            let pairs = mine_synonyms(&subs, ctx.cfg.theta, ctx.exec)?;
            let report = build_report(&subs, &pairs, &traces)?;
            write_file(
                &out,
                serde_json::to_string_pretty(&report).expect("serialisable") + "\n",
            )
        }
        Command::Index { command } => {
            let backend = ctx.backend()?;
            match command {
                IndexCommand::Build { summaries, out } => {
                    let records: Vec<SummaryRecord> = read_jsonl(&summaries)?;
                    let pairs: Vec<(String, String)> = records.into_iter().map(|r| (r.trace_id, r.summary)).collect();
                    let index = build_index(&pairs, &backend)?;
                    save_index(&index, &out)?;
                    Ok(())
                }
                IndexCommand::Query { index, text, top, out } => {
                    let index = load_index(&index)?;
                    let hits = query(&index, &text, top, &backend, ctx.exec).map_err(|e| match e {
                        RetrievalError::InvalidCount => CliError::Usage(e.to_string()),
                        other => other.into(),
                    })?;
                    write_file(&out, to_jsonl(&hits))
                }
            }
        }
        Command::TrainToy {
            epochs,
            pairs,
            eval_pairs,
            out,
            report,
            ..
        } => {
            if pairs == 0 || eval_pairs == 0 {
                return Err(CliError::Usage("--pairs and --eval-pairs must be at least 1".into()));
            }
            let spec = SyntheticSpec::default();
            let train_set = synthetic_corpus(&spec, pairs, 42);
            let eval = synthetic_corpus(&spec, eval_pairs, 7);
            let mut tc = benchmark_train_config();
            tc.lambda = ctx.cfg.lambda;
            tc.seed = ctx.cfg.seed;
            if let Some(e) = epochs {
                tc.epochs = e;
            }
            tc.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let trained = train(&train_set, &tc)?;
            let recall = detail_recall(&trained.model, &trained.vocab, &eval)?;
            save_checkpoint(&out, &trained.model, &trained.vocab)?;
            let r = ToyReport {
                lambda: tc.lambda,
                seed: tc.seed,
                epochs: tc.epochs,
                train_pairs: pairs,
                eval_pairs,
                loss_history: trained.loss_history,
                detail_recall: recall,
            };
            write_file(&report, serde_json::to_string_pretty(&r).expect("serialisable") + "\n")
        }
        Command::Pipeline { .. } => {
            let paths = &ctx.cfg.paths;
            let traces_path = paths
                .traces
                .as_deref()
                .ok_or_else(|| CliError::Usage("pipeline needs --traces or paths.traces".into()))?;
            let out_dir = paths
                .out_dir
                .as_deref()
                .ok_or_else(|| CliError::Usage("pipeline needs --out-dir or paths.out_dir".into()))?;
            let traces = load_traces(traces_path)?;
            let examples = load_examples(paths.icl_examples.as_deref())?;
            let backend = ctx.backend()?;
            let output = run_full_pipeline(&traces, &examples, &backend, &backend, &ctx.cfg.generation, ctx.exec)?;
            let stamp = ctx.cfg.timestamps.then(|| chrono::Utc::now().to_rfc3339());
            write_pipeline_outputs(&output, out_dir, stamp.as_deref())
                .map_err(|e| CliError::Data(format!("{}: {e}", out_dir.display())))?;
            eprintln!(
                "summarised {} trace(s), {} error(s) recorded",
                output.summaries.len(),
                output.errors.len()
            );
            Ok(())
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
