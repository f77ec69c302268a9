//! Interaction traces: the data model, the canonical JSONL schema and the
//! natural-language action templates.
//!
//! A trace line looks like
//!
//! ```json
//! {"trace_id": "t1", "metadata": {"source": "WEB", "website": "uniqlo"},
//!  "actions": [{"element": {"category": "button", "content": "Add to Cart"}, "operation": "CLICK"}]}
//! ```

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("record {record}: invalid JSON: {message}")]
    Json { record: usize, message: String },
    #[error("record {record}: schema error at `{field}`: {message}")]
    Schema {
        record: usize,
        field: String,
        message: String,
    },
    #[error("record {record}: {message}")]
    Invariant { record: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Operation {
    Click,
    Select,
    Type,
    Swipe,
}

impl Operation {
    pub fn as_str(self) -> &'static str {
        match self {
            Operation::Click => "CLICK",
            Operation::Select => "SELECT",
            Operation::Type => "TYPE",
            Operation::Swipe => "SWIPE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "CLICK" => Some(Operation::Click),
            "SELECT" => Some(Operation::Select),
            "TYPE" => Some(Operation::Type),
            "SWIPE" => Some(Operation::Swipe),
            _ => None,
        }
    }

    /// SELECT and TYPE carry the chosen or typed value.
    pub fn needs_additional_content(self) -> bool {
        matches!(self, Operation::Select | Operation::Type)
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct UiElement {
    pub category: String,
    pub content: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub additional_content: Option<String>,
}

impl UiElement {
    /// Builds an element, lowercasing the category. Contents are kept verbatim.
    pub fn new(category: &str, content: &str, additional_content: Option<&str>) -> Result<Self, String> {
        let category = category.trim().to_lowercase();
        if category.is_empty() {
            return Err("element category must be non-empty".into());
        }
        if content.is_empty() {
            return Err("element content must be non-empty".into());
        }
        if additional_content == Some("") {
            return Err("additional_content, when present, must be non-empty".into());
        }
        Ok(UiElement {
            category,
            content: content.to_string(),
            additional_content: additional_content.map(str::to_string),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Action {
    pub element: UiElement,
    pub operation: Operation,
    /// 1-based position in the owning trace.
    #[serde(skip)]
    pub ordinal: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Source {
    Web,
    Mobile,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub website: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subdomain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub app: Option<String>,
}

impl TraceMetadata {
    pub fn web(website: &str) -> Self {
        TraceMetadata {
            source: Source::Web,
            website: Some(website.to_string()),
            domain: None,
            subdomain: None,
            app: None,
        }
    }

    pub fn mobile(app: &str) -> Self {
        TraceMetadata {
            source: Source::Mobile,
            website: None,
            domain: None,
            subdomain: None,
            app: Some(app.to_string()),
        }
    }

    /// Website for WEB traces, app for MOBILE traces.
    pub fn ui_name(&self) -> Option<&str> {
        match self.source {
            Source::Web => self.website.as_deref(),
            Source::Mobile => self.app.as_deref(),
        }
    }

    pub fn check(&self) -> Result<(), String> {
        match self.source {
            Source::Web if self.website.as_deref().is_none_or(str::is_empty) => {
                Err("WEB traces require metadata.website".into())
            }
            Source::Mobile if self.app.as_deref().is_none_or(str::is_empty) => {
                Err("MOBILE traces require metadata.app".into())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Trace {
    pub trace_id: String,
    pub metadata: TraceMetadata,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold_intention: Option<String>,
    pub actions: Vec<Action>,
}

impl Trace {
    /// Validates and assembles a trace, numbering actions from 1.
    pub fn new(
        trace_id: &str,
        metadata: TraceMetadata,
        steps: Vec<(UiElement, Operation)>,
        gold_intention: Option<&str>,
    ) -> Result<Self, String> {
        if trace_id.is_empty() {
            return Err("trace_id must be non-empty".into());
        }
        if steps.is_empty() {
            return Err(format!("trace {trace_id}: actions must be non-empty"));
        }
        metadata.check()?;
        let mut actions = Vec::with_capacity(steps.len());
        for (i, (element, operation)) in steps.into_iter().enumerate() {
            if operation.needs_additional_content() && element.additional_content.is_none() {
                return Err(format!(
                    "trace {trace_id}: action {} is {operation} but its element has no additional_content",
                    i + 1
                ));
            }
            actions.push(Action {
                element,
                operation,
                ordinal: i + 1,
            });
        }
        Ok(Trace {
            trace_id: trace_id.to_string(),
            metadata,
            gold_intention: gold_intention.map(str::to_string),
            actions,
        })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Serialises to one canonical JSONL line (no trailing newline).
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace serialisation is infallible")
    }
}

/// Renders one action with its natural-language template.
pub fn render_action(action: &Action) -> String {
    let el = &action.element;
    let extra = el.additional_content.as_deref().unwrap_or_default();
    match action.operation {
        Operation::Click => format!("Click the {} element with text \"{}\" on it", el.category, el.content),
        Operation::Select => format!(
            "Select \"{}\" from {} with text \"{}\" on it",
            extra, el.category, el.content
        ),
        Operation::Type => format!(
            "Type text \"{}\" into {} with text \"{}\" on it",
            extra, el.category, el.content
        ),
        Operation::Swipe => format!(
            "Swipe on the {} element with text \"{}\" on it",
            el.category, el.content
        ),
    }
}

pub fn render_trace(trace: &Trace) -> Vec<String> {
    trace.actions.iter().map(render_action).collect()
}

fn schema(record: usize, field: &str, message: &str) -> TraceError {
    TraceError::Schema {
        record,
        field: field.to_string(),
        message: message.to_string(),
    }
}

fn req_str<'a>(obj: &'a Map<String, Value>, key: &str, path: &str, record: usize) -> Result<&'a str, TraceError> {
    match obj.get(key) {
        None => Err(schema(record, &format!("{path}{key}"), "missing required field")),
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(schema(record, &format!("{path}{key}"), "expected a string")),
    }
}

fn opt_str<'a>(
    obj: &'a Map<String, Value>,
    key: &str,
    path: &str,
    record: usize,
) -> Result<Option<&'a str>, TraceError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(schema(record, &format!("{path}{key}"), "expected a string")),
    }
}

fn as_object<'a>(value: &'a Value, field: &str, record: usize) -> Result<&'a Map<String, Value>, TraceError> {
    value
        .as_object()
        .ok_or_else(|| schema(record, field, "expected an object"))
}

/// Parses one canonical trace object. `record` is the 0-based record index
/// used in error messages.
pub fn parse_trace(value: &Value, record: usize) -> Result<Trace, TraceError> {
    let obj = as_object(value, "<record>", record)?;
    let trace_id = req_str(obj, "trace_id", "", record)?;

    let meta_val = obj
        .get("metadata")
        .ok_or_else(|| schema(record, "metadata", "missing required field"))?;
    let meta = as_object(meta_val, "metadata", record)?;
    let source = match req_str(meta, "source", "metadata.", record)? {
        "WEB" => Source::Web,
        "MOBILE" => Source::Mobile,
        other => {
            return Err(schema(
                record,
                "metadata.source",
                &format!("expected WEB or MOBILE, got {other:?}"),
            ))
        }
    };
    let metadata = TraceMetadata {
        source,
        website: opt_str(meta, "website", "metadata.", record)?.map(str::to_string),
        domain: opt_str(meta, "domain", "metadata.", record)?.map(str::to_string),
        subdomain: opt_str(meta, "subdomain", "metadata.", record)?.map(str::to_string),
        app: opt_str(meta, "app", "metadata.", record)?.map(str::to_string),
    };
    let gold = opt_str(obj, "gold_intention", "", record)?;

    let actions = match obj.get("actions") {
        None => return Err(schema(record, "actions", "missing required field")),
        Some(Value::Array(a)) => a,
        Some(_) => return Err(schema(record, "actions", "expected an array")),
    };
    let mut steps = Vec::with_capacity(actions.len());
    for (i, act) in actions.iter().enumerate() {
        let path = format!("actions[{i}].");
        let act = as_object(act, &format!("actions[{i}]"), record)?;
        let el_val = act
            .get("element")
            .ok_or_else(|| schema(record, &format!("{path}element"), "missing required field"))?;
        let el = as_object(el_val, &format!("{path}element"), record)?;
        let el_path = format!("{path}element.");
        let category = req_str(el, "category", &el_path, record)?;
        let content = req_str(el, "content", &el_path, record)?;
        let additional = opt_str(el, "additional_content", &el_path, record)?;
        let op_str = req_str(act, "operation", &path, record)?;
        let operation = Operation::parse(op_str).ok_or_else(|| {
            schema(
                record,
                &format!("{path}operation"),
                &format!("unknown operation {op_str:?}"),
            )
        })?;
        let element = UiElement::new(category, content, additional)
            .map_err(|message| TraceError::Invariant { record, message })?;
        steps.push((element, operation));
    }
    Trace::new(trace_id, metadata, steps, gold).map_err(|message| TraceError::Invariant { record, message })
}

/// Parses a JSONL document of traces, skipping blank lines and rejecting
/// duplicate trace ids.
pub fn parse_traces_jsonl(text: &str) -> Result<Vec<Trace>, TraceError> {
    let mut traces = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = traces.len();
        let value: Value = serde_json::from_str(line).map_err(|e| TraceError::Json {
            record,
            message: format!("line {}: {e}", line_no + 1),
        })?;
        let trace = parse_trace(&value, record)?;
        if !seen.insert(trace.trace_id.clone()) {
            return Err(TraceError::Invariant {
                record,
                message: format!("duplicate trace_id {:?}", trace.trace_id),
            });
        }
        traces.push(trace);
    }
    Ok(traces)
}

pub fn read_traces(path: &Path) -> Result<Vec<Trace>, TraceError> {
    let text = std::fs::read_to_string(path).map_err(|e| TraceError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_traces_jsonl(&text).map_err(|e| match e {
        TraceError::Io { .. } => e,
        other => TraceError::Io {
            path: path.display().to_string(),
            message: other.to_string(),
        },
    })
}
