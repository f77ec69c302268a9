//! Prompt construction for sub-goal generation (in-context learning) and
//! intention summarisation, plus parsers for the model responses.
//!
//! Sub-goal responses use one line per sub-goal:
//!
//! ```text
//! - Set reservation type [actions 1..2]
//! - Choose dates [actions 3..5]
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action_model::{render_trace, Source, Trace, TraceMetadata};

pub const FALLBACK_SUBGOAL_LABEL: &str = "Complete the task";

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("at least one in-context example is required")]
    EmptyExamples,
    #[error("no parsable sub-goal lines in response")]
    Parse,
    #[error("sub-goals do not partition actions 1..{n_actions}: {detail}")]
    Coverage { n_actions: usize, detail: String },
    #[error("empty response")]
    EmptyResponse,
    #[error("in-context example {index}: {message}")]
    InvalidExample { index: usize, message: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PromptKind {
    Subgoal,
    Summary,
    NextAction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptText {
    pub text: String,
    pub kind: PromptKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubGoal {
    pub label: String,
    pub first_action: usize,
    pub last_action: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubGoalAssignment {
    pub entries: Vec<SubGoal>,
}

impl SubGoalAssignment {
    /// One sub-goal spanning every action.
    pub fn single(n_actions: usize, label: &str) -> Self {
        SubGoalAssignment {
            entries: vec![SubGoal {
                label: label.to_string(),
                first_action: 1,
                last_action: n_actions,
            }],
        }
    }

    pub fn n_actions(&self) -> usize {
        self.entries.last().map_or(0, |e| e.last_action)
    }

    /// Formats entries in the response line grammar, one per line.
    pub fn to_lines(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| format!("- {} [actions {}..{}]", e.label, e.first_action, e.last_action))
            .collect()
    }

    /// Checks the entries partition `1..=n_actions` in order.
    pub fn validate(&self, n_actions: usize) -> Result<(), PromptError> {
        check_partition(&self.entries, n_actions)
    }
}

fn check_partition(entries: &[SubGoal], n_actions: usize) -> Result<(), PromptError> {
    let mut counts = vec![0usize; n_actions + 1];
    let mut problems = Vec::new();
    for e in entries {
        if e.first_action == 0 || e.first_action > e.last_action {
            problems.push(format!(
                "invalid range {}..{} for {:?}",
                e.first_action, e.last_action, e.label
            ));
            continue;
        }
        for i in e.first_action..=e.last_action {
            if i > n_actions {
                problems.push(format!("index {i} out of range"));
                break;
            }
            counts[i] += 1;
        }
    }
    let uncovered: Vec<usize> = (1..=n_actions).filter(|&i| counts[i] == 0).collect();
    let overlapping: Vec<usize> = (1..=n_actions).filter(|&i| counts[i] > 1).collect();
    if !uncovered.is_empty() {
        problems.push(format!("uncovered {uncovered:?}"));
    }
    if !overlapping.is_empty() {
        problems.push(format!("covered more than once {overlapping:?}"));
    }
    if problems.is_empty() && entries.windows(2).any(|w| w[0].last_action + 1 != w[1].first_action) {
        problems.push("ranges are not in order".into());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(PromptError::Coverage {
            n_actions,
            detail: problems.join("; "),
        })
    }
}

fn parse_subgoal_line(line: &str) -> Option<SubGoal> {
    let rest = line.trim().strip_prefix('-')?.trim();
    let open = rest.rfind("[actions")?;
    let label = rest[..open].trim();
    let inner = rest[open + "[actions".len()..].trim().strip_suffix(']')?.trim();
    let (a, b) = inner.split_once("..")?;
    let first_action = a.trim().parse().ok()?;
    let last_action = b.trim().parse().ok()?;
    if label.is_empty() {
        return None;
    }
    Some(SubGoal {
        label: label.to_string(),
        first_action,
        last_action,
    })
}

/// Parses a sub-goal response. Lines outside the grammar are ignored; the
/// parsed ranges, sorted by start, must partition `1..=n_actions`.
pub fn parse_subgoal_response(text: &str, n_actions: usize) -> Result<SubGoalAssignment, PromptError> {
    let mut entries: Vec<SubGoal> = text.lines().filter_map(parse_subgoal_line).collect();
    if entries.is_empty() {
        return Err(PromptError::Parse);
    }
    entries.sort_by_key(|e| e.first_action);
    check_partition(&entries, n_actions)?;
    Ok(SubGoalAssignment { entries })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IclExample {
    pub metadata: TraceMetadata,
    pub rendered_actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_intention: Option<String>,
    pub subgoal_lines: Vec<String>,
}

impl IclExample {
    pub fn from_trace(trace: &Trace, subgoals: &SubGoalAssignment) -> Self {
        IclExample {
            metadata: trace.metadata.clone(),
            rendered_actions: render_trace(trace),
            gold_intention: trace.gold_intention.clone(),
            subgoal_lines: subgoals.to_lines(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.metadata.check()?;
        if self.rendered_actions.is_empty() {
            return Err("rendered_actions is empty".into());
        }
        parse_subgoal_response(&self.subgoal_lines.join("\n"), self.rendered_actions.len())
            .map(|_| ())
            .map_err(|e| e.to_string())
    }
}

/// The shipped five-example fixture. Author-written, not expert annotations.
pub const DEFAULT_ICL_EXAMPLES: &str = include_str!("../data/icl_examples.json");

pub fn parse_icl_examples(json: &str) -> Result<Vec<IclExample>, PromptError> {
    let examples: Vec<IclExample> = serde_json::from_str(json).map_err(|e| PromptError::Io(e.to_string()))?;
    for (index, ex) in examples.iter().enumerate() {
        ex.validate()
            .map_err(|message| PromptError::InvalidExample { index, message })?;
    }
    Ok(examples)
}

pub fn load_icl_examples(path: &Path) -> Result<Vec<IclExample>, PromptError> {
    let text = std::fs::read_to_string(path).map_err(|e| PromptError::Io(format!("{}: {e}", path.display())))?;
    parse_icl_examples(&text)
}

pub fn default_icl_examples() -> Vec<IclExample> {
    parse_icl_examples(DEFAULT_ICL_EXAMPLES).expect("shipped ICL fixture is valid")
}

const SUBGOAL_FRAMING: &str = "\
You are analysing how a user interacts with a user interface. Each sample gives \
the environment metadata and the actions the user performed, in order, written \
as natural-language sentences. Group consecutive actions into sub-goals. A \
sub-goal is a short phrase describing what the user wanted to achieve with a \
contiguous run of actions. Use as many sub-goals as the behaviour needs, and \
assign every action to exactly one sub-goal.
Answer with one line per sub-goal, in order, formatted as:
- <sub-goal> [actions <first>..<last>]
";

const SUMMARY_FRAMING: &str = "\
You are given a user's interaction with a user interface: the environment \
metadata, the low-level actions in order, and the sub-goals those actions were \
grouped into. Summarise the user's overall intention in one sentence. Keep the \
specific contents of the UI elements the user interacted with, such as element \
names, selected values and typed text.
";

const SUMMARY_OUTPUT_FORMAT: &str = "\
Answer with a single line of the form:
Intention: <one-sentence summary>
";

fn write_metadata(out: &mut String, meta: &TraceMetadata) {
    match meta.source {
        Source::Web => {
            if let Some(w) = &meta.website {
                let _ = writeln!(out, "Website: {w}");
            }
            if let Some(d) = &meta.domain {
                let _ = writeln!(out, "Domain: {d}");
            }
            if let Some(s) = &meta.subdomain {
                let _ = writeln!(out, "Sub-domain: {s}");
            }
        }
        Source::Mobile => {
            if let Some(a) = &meta.app {
                let _ = writeln!(out, "App: {a}");
            }
        }
    }
}

fn write_actions<S: AsRef<str>>(out: &mut String, rendered: &[S]) {
    out.push_str("Actions:\n");
    for (i, line) in rendered.iter().enumerate() {
        let _ = writeln!(out, "{}. {}", i + 1, line.as_ref());
    }
}

/// Builds the in-context-learning prompt asking for the query trace's
/// sub-goals. The query's gold intention is never included.
pub fn build_subgoal_prompt(trace: &Trace, examples: &[IclExample]) -> Result<PromptText, PromptError> {
    if examples.is_empty() {
        return Err(PromptError::EmptyExamples);
    }
    let mut out = String::from(SUBGOAL_FRAMING);
    for (i, ex) in examples.iter().enumerate() {
        let _ = writeln!(out, "\n### Example {}", i + 1);
        write_metadata(&mut out, &ex.metadata);
        if let Some(task) = &ex.gold_intention {
            let _ = writeln!(out, "Task: {task}");
        }
        write_actions(&mut out, &ex.rendered_actions);
        out.push_str("Sub-goals:\n");
        for line in &ex.subgoal_lines {
            let _ = writeln!(out, "{line}");
        }
    }
    out.push_str("\n### New sample\n");
    write_metadata(&mut out, &trace.metadata);
    write_actions(&mut out, &render_trace(trace));
    out.push_str("Sub-goals:\n");
    Ok(PromptText {
        text: out,
        kind: PromptKind::Subgoal,
    })
}

/// Builds the summarisation prompt: framing, metadata, actions, sub-goals
/// and the expected output format.
pub fn build_summary_prompt(trace: &Trace, subgoals: &SubGoalAssignment) -> Result<PromptText, PromptError> {
    subgoals.validate(trace.len())?;
    let mut out = String::from(SUMMARY_FRAMING);
    out.push('\n');
    write_metadata(&mut out, &trace.metadata);
    write_actions(&mut out, &render_trace(trace));
    out.push_str("Sub-goals:\n");
    for line in subgoals.to_lines() {
        let _ = writeln!(out, "{line}");
    }
    out.push('\n');
    out.push_str(SUMMARY_OUTPUT_FORMAT);
    Ok(PromptText {
        text: out,
        kind: PromptKind::Summary,
    })
}

/// First non-empty line of a response with any leading `Intention:` or
/// `Summary:` label and surrounding quotes removed.
pub fn extract_summary(text: &str) -> Result<String, PromptError> {
    for line in text.lines() {
        let mut s = line.trim();
        for label in ["Intention:", "Summary:"] {
            if let Some(head) = s.get(..label.len()) {
                if head.eq_ignore_ascii_case(label) {
                    s = s[label.len()..].trim();
                }
            }
        }
        let s = s
            .trim_matches(|c| matches!(c, '"' | '\'' | '\u{201c}' | '\u{201d}'))
            .trim();
        if !s.is_empty() {
            return Ok(s.to_string());
        }
    }
    Err(PromptError::EmptyResponse)
}
