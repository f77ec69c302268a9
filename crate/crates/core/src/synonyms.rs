//! Behaviour synonyms: action sub-sequences whose summaries embed close
//! together, i.e. different paths to the same intention.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action_model::{render_action, Trace};
use crate::backends::{BackendError, CachingGenerator, Embedder, GenerationParams, TextGenerator};
use crate::exec::Execution;
use crate::metrics::{cosine_similarity, MetricsError};
use crate::prompting::{build_summary_prompt, extract_summary, PromptError, SubGoalAssignment, FALLBACK_SUBGOAL_LABEL};

pub const DEFAULT_THETA: f64 = 0.8;
pub const MIN_WINDOW: usize = 2;

#[derive(Debug, Error)]
pub enum SynonymError {
    #[error("trace {trace_id} has {len} actions, windows need at least {min}")]
    TraceTooShort { trace_id: String, len: usize, min: usize },
    #[error("invalid window bounds: min {min}, max {max}")]
    InvalidBounds { min: usize, max: usize },
    #[error("threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("sub-sequence {trace_id}[{start}..{end}] does not fit its trace")]
    BadWindow { trace_id: String, start: usize, end: usize },
    #[error("unknown trace {0}")]
    UnknownTrace(String),
    #[error("{a} and {b} share UI and actions; not a synonym")]
    SameUiSameActions { a: String, b: String },
    #[error("embedding of {0} is not unit length")]
    NotNormalised(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubSequence {
    pub parent_trace_id: String,
    /// 1-based, inclusive.
    pub start: usize,
    pub end: usize,
    pub summary: String,
    pub embedding: Vec<f64>,
}

impl SubSequence {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self) -> String {
        format!("{}[{}..{}]", self.parent_trace_id, self.start, self.end)
    }

    fn key(&self) -> (&str, usize, usize) {
        (&self.parent_trace_id, self.start, self.end)
    }

    fn overlaps(&self, other: &SubSequence) -> bool {
        self.parent_trace_id == other.parent_trace_id && self.start <= other.end && other.start <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SynonymType {
    SameUiDiffActions,
    DiffUiDiffActions,
    DiffUiSameActions,
}

/// Indices into the mined sub-sequence list, with `a` before `b` in
/// (trace id, start, end) order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynonymPair {
    pub a: usize,
    pub b: usize,
    pub similarity: f64,
}

/// Every window of `min_len..=max_len` consecutive actions in a trace of
/// `n` actions, as 1-based inclusive bounds ordered by (length, start).
pub fn segment_windows(n: usize, min_len: usize, max_len: usize) -> Result<Vec<(usize, usize)>, SynonymError> {
    if min_len < 1 || max_len < min_len {
        return Err(SynonymError::InvalidBounds {
            min: min_len,
            max: max_len,
        });
    }
    if n < min_len {
        return Err(SynonymError::TraceTooShort {
            trace_id: String::new(),
            len: n,
            min: min_len,
        });
    }
    let mut out = Vec::new();
    for len in min_len..=max_len.min(n) {
        for start in 1..=n + 1 - len {
            out.push((start, start + len - 1));
        }
    }
    Ok(out)
}

/// Actions `start..=end` (1-based) of `trace` as a trace of their own.
pub fn sub_trace(trace: &Trace, start: usize, end: usize) -> Result<Trace, SynonymError> {
    if start < 1 || end < start || end > trace.len() {
        return Err(SynonymError::BadWindow {
            trace_id: trace.trace_id.clone(),
            start,
            end,
        });
    }
    let mut actions = trace.actions[start - 1..end].to_vec();
    for (i, a) in actions.iter_mut().enumerate() {
        a.ordinal = i + 1;
    }
    Ok(Trace {
        trace_id: format!("{}[{start}..{end}]", trace.trace_id),
        metadata: trace.metadata.clone(),
        gold_intention: None,
        actions,
    })
}

fn normalise(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

/// Summarises and embeds every window (length ≥ 2) of every trace.
///
/// Each window is summarised with a single sub-goal covering all of its
/// actions. Generations go through a prompt-keyed cache so identical
/// windows cost one backend call.
pub fn summarise_windows(
    traces: &[Trace],
    generator: &dyn TextGenerator,
    embedder: &dyn Embedder,
    params: &GenerationParams,
    exec: Execution,
) -> Result<Vec<SubSequence>, SynonymError> {
    let mut jobs = Vec::new();
    for t in traces {
        let windows = segment_windows(t.len(), MIN_WINDOW, t.len()).map_err(|_| SynonymError::TraceTooShort {
            trace_id: t.trace_id.clone(),
            len: t.len(),
            min: MIN_WINDOW,
        })?;
        jobs.extend(windows.into_iter().map(|w| (t, w)));
    }
    let cache = CachingGenerator::new(generator);
    let summaries = exec.map(&jobs, |&(t, (start, end))| -> Result<String, SynonymError> {
        let sub = sub_trace(t, start, end)?;
        let prompt = build_summary_prompt(&sub, &SubGoalAssignment::single(sub.len(), FALLBACK_SUBGOAL_LABEL))?;
        Ok(extract_summary(&cache.generate(&prompt, params)?)?)
    });
    let summaries: Vec<String> = summaries.into_iter().collect::<Result<_, _>>()?;
    log::info!(
        "summarised {} windows with {} backend calls",
        jobs.len(),
        cache.misses()
    );
    let embeddings = if summaries.is_empty() {
        Vec::new()
    } else {
        embedder.embed(&summaries)?
    };
    if embeddings.len() != summaries.len() {
        return Err(MetricsError::EmbeddingCount {
            pair: 0,
            got: embeddings.len(),
        }
        .into());
    }
    jobs.iter()
        .zip(summaries)
        .zip(embeddings)
        .map(|((&(t, (start, end)), summary), mut embedding)| {
            let s = SubSequence {
                parent_trace_id: t.trace_id.clone(),
                start,
                end,
                summary,
                embedding: Vec::new(),
            };
            if !normalise(&mut embedding) {
                return Err(SynonymError::NotNormalised(s.label()));
            }
            Ok(SubSequence { embedding, ..s })
        })
        .collect()
}

/// All sub-sequence pairs with cosine ≥ `theta`, from different traces or
/// from non-overlapping windows of one trace. Sorted by descending
/// similarity, then by canonical position.
pub fn mine_synonyms(subs: &[SubSequence], theta: f64, exec: Execution) -> Result<Vec<SynonymPair>, SynonymError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(SynonymError::InvalidThreshold(theta));
    }
    for s in subs {
        let n: f64 = s.embedding.iter().map(|x| x * x).sum();
        if (n - 1.0).abs() > 1e-6 {
            return Err(SynonymError::NotNormalised(s.label()));
        }
    }
    let found = exec.flat_map_range(subs.len(), |i| {
        let mut out = Vec::new();
        for j in i + 1..subs.len() {
            if subs[i].overlaps(&subs[j]) {
                continue;
            }
            match cosine_similarity(&subs[i].embedding, &subs[j].embedding) {
                Ok(sim) if sim >= theta => {
                    let (a, b) = if subs[i].key() <= subs[j].key() { (i, j) } else { (j, i) };
                    out.push(Ok(SynonymPair { a, b, similarity: sim }));
                }
                Ok(_) => {}
                Err(e) => out.push(Err(e)),
            }
        }
        out
    });
    let mut pairs: Vec<SynonymPair> = found.into_iter().collect::<Result<_, _>>()?;
    pairs.sort_by(|x, y| {
        y.similarity
            .total_cmp(&x.similarity)
            .then_with(|| subs[x.a].key().cmp(&subs[y.a].key()))
            .then_with(|| subs[x.b].key().cmp(&subs[y.b].key()))
    });
    Ok(pairs)
}

fn window_actions(sub: &SubSequence, traces: &HashMap<&str, &Trace>) -> Result<(Vec<String>, String), SynonymError> {
    let t = traces
        .get(sub.parent_trace_id.as_str())
        .ok_or_else(|| SynonymError::UnknownTrace(sub.parent_trace_id.clone()))?;
    let w = sub_trace(t, sub.start, sub.end)?;
    let ui = format!("{:?}:{}", t.metadata.source, t.metadata.ui_name().unwrap_or(""));
    Ok((w.actions.iter().map(render_action).collect(), ui))
}

pub fn classify_synonym(
    a: &SubSequence,
    b: &SubSequence,
    traces: &HashMap<&str, &Trace>,
) -> Result<SynonymType, SynonymError> {
    let (acts_a, ui_a) = window_actions(a, traces)?;
    let (acts_b, ui_b) = window_actions(b, traces)?;
    match (ui_a == ui_b, acts_a == acts_b) {
        (true, true) => Err(SynonymError::SameUiSameActions {
            a: a.label(),
            b: b.label(),
        }),
        (true, false) => Ok(SynonymType::SameUiDiffActions),
        (false, false) => Ok(SynonymType::DiffUiDiffActions),
        (false, true) => Ok(SynonymType::DiffUiSameActions),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shorter {
    A,
    B,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Efficiency {
    pub len_a: usize,
    pub len_b: usize,
    pub shorter: Shorter,
    pub delta: usize,
}

pub fn efficiency(a: &SubSequence, b: &SubSequence) -> Efficiency {
    let (la, lb) = (a.len(), b.len());
    Efficiency {
        len_a: la,
        len_b: lb,
        shorter: match la.cmp(&lb) {
            std::cmp::Ordering::Less => Shorter::A,
            std::cmp::Ordering::Greater => Shorter::B,
            std::cmp::Ordering::Equal => Shorter::Equal,
        },
        delta: la.abs_diff(lb),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynonymReportEntry {
    pub trace_a: String,
    pub window_a: [usize; 2],
    pub summary_a: String,
    pub trace_b: String,
    pub window_b: [usize; 2],
    pub summary_b: String,
    pub similarity: f64,
    /// `None` for pairs that share both UI and actions.
    #[serde(rename = "type")]
    pub synonym_type: Option<SynonymType>,
    pub efficiency: Efficiency,
}

/// Classifies mined pairs; degenerate pairs stay in the report untyped.
pub fn build_report(
    subs: &[SubSequence],
    pairs: &[SynonymPair],
    traces: &[Trace],
) -> Result<Vec<SynonymReportEntry>, SynonymError> {
    let lookup: HashMap<&str, &Trace> = traces.iter().map(|t| (t.trace_id.as_str(), t)).collect();
    pairs
        .iter()
        .map(|p| {
            let (a, b) = (&subs[p.a], &subs[p.b]);
            let synonym_type = match classify_synonym(a, b, &lookup) {
                Ok(t) => Some(t),
                Err(SynonymError::SameUiSameActions { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(SynonymReportEntry {
                trace_a: a.parent_trace_id.clone(),
                window_a: [a.start, a.end],
                summary_a: a.summary.clone(),
                trace_b: b.parent_trace_id.clone(),
                window_b: [b.start, b.end],
                summary_b: b.summary.clone(),
                similarity: p.similarity,
                synonym_type,
                efficiency: efficiency(a, b),
            })
        })
        .collect()
}
