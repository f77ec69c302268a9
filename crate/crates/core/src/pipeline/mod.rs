//! Run configuration and the end-to-end summarisation pipeline.

pub mod adapters;
pub mod cli;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::action_model::Trace;
use crate::attention::AttentionConfig;
use crate::backends::{BackendConfig, Embedder, GenerationParams, TextGenerator, UNMATCHED};
use crate::exec::Execution;
use crate::metrics::{evaluate_summaries, MetricReport, MetricsError};
use crate::prompting::{
    build_subgoal_prompt, build_summary_prompt, extract_summary, parse_subgoal_response, IclExample, SubGoal,
    SubGoalAssignment, FALLBACK_SUBGOAL_LABEL,
};

pub const SUMMARIES_FILE: &str = "summaries.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const ERRORS_FILE: &str = "errors.jsonl";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub traces: Option<PathBuf>,
    pub icl_examples: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

/// Settings shared by every subcommand, read from a TOML file. Command-line
/// flags override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub backend: BackendConfig,
    pub generation: GenerationParams,
    pub lambda: f64,
    pub theta: f64,
    pub k: usize,
    pub seed: u64,
    pub timestamps: bool,
    pub paths: PathsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            backend: BackendConfig::default(),
            generation: GenerationParams::default(),
            lambda: 2.0,
            theta: crate::synonyms::DEFAULT_THETA,
            k: crate::next_action::DEFAULT_K,
            seed: 42,
            timestamps: true,
            paths: PathsConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> Result<(), String> {
        AttentionConfig::new(self.lambda).map_err(|e| e.to_string())?;
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(format!("theta must be in (0, 1], got {}", self.theta));
        }
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        self.backend.validate().map_err(|e| e.to_string())?;
        self.generation.validate().map_err(|e| e.to_string())?;
        let p = &self.paths;
        for (name, path) in [
            ("traces", &p.traces),
            ("icl_examples", &p.icl_examples),
            ("out_dir", &p.out_dir),
        ] {
            if path.as_ref().is_some_and(|p| p.as_os_str().is_empty()) {
                return Err(format!("paths.{name} must not be empty"));
            }
        }
        if self
            .backend
            .mock_rules
            .as_ref()
            .is_some_and(|p| p.as_os_str().is_empty())
        {
            return Err("backend.mock_rules must not be empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryLine {
    pub trace_id: String,
    pub subgoals: Vec<SubGoal>,
    /// True when the sub-goal response could not be used and the whole
    /// trace became one sub-goal.
    pub subgoal_fallback: bool,
    pub summary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorLine {
    pub trace_id: String,
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub summaries: Vec<SummaryLine>,
    pub errors: Vec<ErrorLine>,
    /// Present when at least one trace has both a summary and a gold intention.
    pub report: Option<MetricReport>,
}

struct TraceResult {
    line: SummaryLine,
    errors: Vec<ErrorLine>,
}

fn summarise_trace(
    trace: &Trace,
    examples: &[IclExample],
    generator: &dyn TextGenerator,
    params: &GenerationParams,
) -> TraceResult {
    let mut errors = Vec::new();
    let mut fail = |stage: &str, message: String| {
        log::warn!("{}: {stage}: {message}", trace.trace_id);
        errors.push(ErrorLine {
            trace_id: trace.trace_id.clone(),
            stage: stage.into(),
            message,
        });
    };

    let parsed = build_subgoal_prompt(trace, examples)
        .map_err(|e| e.to_string())
        .and_then(|p| generator.generate(&p, params).map_err(|e| e.to_string()))
        .and_then(|r| parse_subgoal_response(&r, trace.len()).map_err(|e| e.to_string()));
    let (subgoals, subgoal_fallback) = match parsed {
        Ok(s) => (s, false),
        Err(message) => {
            fail("subgoals", message);
            (SubGoalAssignment::single(trace.len(), FALLBACK_SUBGOAL_LABEL), true)
        }
    };

    let summary = build_summary_prompt(trace, &subgoals)
        .map_err(|e| e.to_string())
        .and_then(|p| generator.generate(&p, params).map_err(|e| e.to_string()))
        .and_then(|r| extract_summary(&r).map_err(|e| e.to_string()));
    let summary = match summary {
        Ok(s) => {
            if s == UNMATCHED {
                fail("summary", "mock backend had no rule for this prompt".into());
            }
            Some(s)
        }
        Err(message) => {
            fail("summary", message);
            None
        }
    };
    TraceResult {
        line: SummaryLine {
            trace_id: trace.trace_id.clone(),
            subgoals: subgoals.entries,
            subgoal_fallback,
            summary,
            generated_at: None,
        },
        errors,
    }
}

/// Sub-goals, then a summary conditioned on them, for every trace; then
/// metrics against gold intentions where available.
///
/// A failing trace never stops the run: sub-goal failures fall back to a
/// single sub-goal, summary failures leave the summary empty, and both are
/// reported in `errors`. Traces run concurrently; output order follows input.
pub fn run_full_pipeline(
    traces: &[Trace],
    examples: &[IclExample],
    generator: &dyn TextGenerator,
    embedder: &dyn Embedder,
    params: &GenerationParams,
    exec: Execution,
) -> Result<PipelineOutput, MetricsError> {
    let results = exec.map(traces, |t| summarise_trace(t, examples, generator, params));
    let mut summaries = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for r in results {
        summaries.push(r.line);
        errors.extend(r.errors);
    }
    let pairs: Vec<(String, String)> = traces
        .iter()
        .zip(&summaries)
        .filter_map(|(t, s)| Some((s.summary.clone()?, t.gold_intention.clone()?)))
        .collect();
    let report = if pairs.is_empty() {
        None
    } else {
        Some(evaluate_summaries(&pairs, embedder, "pipeline", exec)?)
    };
    Ok(PipelineOutput {
        summaries,
        errors,
        report,
    })
}

/// Prompts that contain the gold intention of any of `traces`, as
/// (prompt index, trace id).
pub fn audit_prompts<S: AsRef<str>>(prompts: &[S], traces: &[Trace]) -> Vec<(usize, String)> {
    let mut leaks = Vec::new();
    for (i, p) in prompts.iter().enumerate() {
        for t in traces {
            if let Some(gold) = t.gold_intention.as_deref().filter(|g| !g.trim().is_empty()) {
                if p.as_ref().contains(gold) {
                    leaks.push((i, t.trace_id.clone()));
                }
            }
        }
    }
    leaks
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        let _ = writeln!(out, "{}", serde_json::to_string(item).expect("serialisable record"));
    }
    out
}

/// Writes summaries, the error sidecar and (if any) the metric report into
/// `dir`. `timestamp`, when given, is stamped on every summary line.
pub fn write_pipeline_outputs(out: &PipelineOutput, dir: &Path, timestamp: Option<&str>) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let lines: Vec<SummaryLine> = out
        .summaries
        .iter()
        .map(|l| SummaryLine {
            generated_at: timestamp.map(str::to_string),
            ..l.clone()
        })
        .collect();
    std::fs::write(dir.join(SUMMARIES_FILE), to_jsonl(&lines))?;
    std::fs::write(dir.join(ERRORS_FILE), to_jsonl(&out.errors))?;
    let report_path = dir.join(REPORT_FILE);
    match &out.report {
        Some(r) => std::fs::write(report_path, r.to_json_pretty() + "\n")?,
        None if report_path.exists() => std::fs::remove_file(report_path)?,
        None => {}
    }
    Ok(())
}
