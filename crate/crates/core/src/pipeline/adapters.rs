//! Best-effort converters from raw dataset exports to canonical traces.
//!
//! Records that cannot be mapped are skipped and counted by reason.
//!
//! **Mind2Web** task objects (a JSON array, or one object per line):
//!
//! | raw field        | canonical field            |
//! |------------------|----------------------------|
//! | `annotation_id`  | `trace_id`                 |
//! | `website`        | `metadata.website`         |
//! | `domain`         | `metadata.domain`          |
//! | `subdomain`      | `metadata.subdomain`       |
//! | `confirmed_task` | `gold_intention`           |
//! | `action_reprs[i]`| `actions[i]`               |
//!
//! An action repr reads `[category] content -> OP` or
//! `[category] content -> OP: value`. CLICK, SELECT and TYPE map directly;
//! any other operation (HOVER, ENTER, ...) or an empty content skips the
//! whole task.
//!
//! **MoTIF** records (same container rules) carry `trace_id` (or `id`),
//! `app`, an optional `goal` (or `instruction`) used as the gold intention,
//! and `actions`, a list of short English sentences. Sentences are mapped
//! by their leading verb:
//!
//! - `click|tap|press [on] [the] <object>` → CLICK
//! - `type <text> into|in [the] <object>` → TYPE, `<text>` as the typed value
//! - `select|choose <value> from|in [the] <object>` → SELECT
//! - `swipe|scroll <rest>` → SWIPE on a `screen` element whose content is
//!   `<rest>` (or `screen` when empty)
//!
//! The object's last word becomes the category when it is a known widget
//! noun (button, icon, tab, ...) and the remaining words the content;
//! otherwise the category is `element` and the whole object the content.
//! Quotes around contents are stripped. Any other verb skips the record.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::action_model::{Operation, Trace, TraceMetadata, UiElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adapter {
    Mind2Web,
    Motif,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AdapterReport {
    pub converted: usize,
    pub skipped: BTreeMap<String, usize>,
}

impl AdapterReport {
    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }
}

/// Splits raw input into records: a top-level JSON array, or JSON lines.
pub fn raw_records(text: &str) -> Result<Vec<Value>, String> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return match serde_json::from_str::<Value>(trimmed).map_err(|e| e.to_string())? {
            Value::Array(items) => Ok(items),
            _ => unreachable!("input starting with [ parses as an array"),
        };
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

pub fn convert(adapter: Adapter, records: &[Value]) -> (Vec<Trace>, AdapterReport) {
    let mut report = AdapterReport::default();
    let mut traces = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for r in records {
        let result = match adapter {
            Adapter::Mind2Web => mind2web_record(r),
            Adapter::Motif => motif_record(r),
        };
        match result {
            Ok(t) if !seen.insert(t.trace_id.clone()) => {
                *report.skipped.entry("duplicate trace id".into()).or_insert(0) += 1;
            }
            Ok(t) => {
                report.converted += 1;
                traces.push(t);
            }
            Err(reason) => *report.skipped.entry(reason).or_insert(0) += 1,
        }
    }
    (traces, report)
}

fn str_field<'a>(r: &'a Value, keys: &[&str]) -> Option<&'a str> {
    keys.iter()
        .find_map(|k| r.get(*k).and_then(Value::as_str))
        .filter(|s| !s.is_empty())
}

fn string_list(r: &Value, key: &str) -> Result<Vec<String>, String> {
    let items = r.get(key).and_then(Value::as_array).ok_or(format!("missing {key}"))?;
    items
        .iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or(format!("non-string entry in {key}"))
        })
        .collect()
}

/// Parses `[category] content -> OP[: value]`.
pub fn parse_mind2web_repr(repr: &str) -> Result<(UiElement, Operation), String> {
    let rest = repr.trim().strip_prefix('[').ok_or("malformed action repr")?;
    let (category, rest) = rest.split_once(']').ok_or("malformed action repr")?;
    let (content, op) = rest.rsplit_once("->").ok_or("malformed action repr")?;
    let content = content.trim();
    let (op, value) = match op.split_once(':') {
        Some((o, v)) => (o.trim(), Some(v.trim())),
        None => (op.trim(), None),
    };
    if content.is_empty() {
        return Err("empty element content".into());
    }
    let operation = match op {
        "CLICK" => Operation::Click,
        "SELECT" => Operation::Select,
        "TYPE" => Operation::Type,
        other => return Err(format!("unsupported operation {other}")),
    };
    let value = value.filter(|v| !v.is_empty() && operation.needs_additional_content());
    if operation.needs_additional_content() && value.is_none() {
        return Err(format!("{} without a value", operation.as_str()));
    }
    let el = UiElement::new(category, content, value).map_err(|_| "empty element category".to_string())?;
    Ok((el, operation))
}

fn mind2web_record(r: &Value) -> Result<Trace, String> {
    let id = str_field(r, &["annotation_id"]).ok_or("missing annotation_id")?;
    let website = str_field(r, &["website"]).ok_or("missing website")?;
    let mut meta = TraceMetadata::web(website);
    meta.domain = str_field(r, &["domain"]).map(str::to_string);
    meta.subdomain = str_field(r, &["subdomain"]).map(str::to_string);
    let steps = string_list(r, "action_reprs")?
        .iter()
        .map(|s| parse_mind2web_repr(s))
        .collect::<Result<Vec<_>, _>>()?;
    if steps.is_empty() {
        return Err("no actions".into());
    }
    Trace::new(id, meta, steps, str_field(r, &["confirmed_task"])).map_err(|_| "invalid trace".into())
}

const WIDGET_NOUNS: &[&str] = &[
    "button", "icon", "tab", "link", "checkbox", "field", "box", "switch", "image", "menu", "item", "text", "toggle",
    "option", "bar", "list",
];

fn unquote(s: &str) -> &str {
    let s = s.trim();
    for (open, close) in [('"', '"'), ('\'', '\''), ('“', '”')] {
        if let Some(inner) = s.strip_prefix(open).and_then(|x| x.strip_suffix(close)) {
            return inner.trim();
        }
    }
    s
}

fn object_element(object: &str, value: Option<&str>) -> Result<UiElement, String> {
    let object = object.trim();
    let object = object.strip_prefix("on ").unwrap_or(object).trim_start();
    let object = object.strip_prefix("the ").unwrap_or(object).trim();
    let object = unquote(object);
    if object.is_empty() {
        return Err("action sentence without an object".into());
    }
    let (category, content) = match object.rsplit_once(' ') {
        Some((head, last)) if WIDGET_NOUNS.contains(&last.to_lowercase().as_str()) => {
            (last.to_lowercase(), unquote(head).to_string())
        }
        None if WIDGET_NOUNS.contains(&object.to_lowercase().as_str()) => (object.to_lowercase(), object.to_string()),
        _ => ("element".to_string(), object.to_string()),
    };
    UiElement::new(&category, &content, value).map_err(|e| e.to_string())
}

/// Maps one MoTIF-style action sentence to an element and operation.
pub fn parse_motif_sentence(sentence: &str) -> Result<(UiElement, Operation), String> {
    let s = sentence.trim().trim_end_matches('.');
    let (verb, rest) = s.split_once(' ').unwrap_or((s, ""));
    match verb.to_lowercase().as_str() {
        "click" | "tap" | "press" => Ok((object_element(rest, None)?, Operation::Click)),
        "type" | "enter" | "input" => {
            let (text, object) = rest
                .rsplit_once(" into ")
                .or_else(|| rest.rsplit_once(" in "))
                .ok_or("type sentence without a target")?;
            let text = unquote(text);
            if text.is_empty() {
                return Err("type sentence without text".into());
            }
            Ok((object_element(object, Some(text))?, Operation::Type))
        }
        "select" | "choose" => {
            let (value, object) = rest
                .rsplit_once(" from ")
                .or_else(|| rest.rsplit_once(" in "))
                .ok_or("select sentence without a source")?;
            let value = unquote(value);
            if value.is_empty() {
                return Err("select sentence without a value".into());
            }
            Ok((object_element(object, Some(value))?, Operation::Select))
        }
        "swipe" | "scroll" => {
            let content = unquote(rest);
            let content = if content.is_empty() { "screen" } else { content };
            Ok((UiElement::new("screen", content, None)?, Operation::Swipe))
        }
        other => Err(format!("unrecognised verb {other:?}")),
    }
}

fn motif_record(r: &Value) -> Result<Trace, String> {
    let id = str_field(r, &["trace_id", "id"]).ok_or("missing trace_id")?;
    let app = str_field(r, &["app"]).ok_or("missing app")?;
    let steps = string_list(r, "actions")?
        .iter()
        .map(|s| parse_motif_sentence(s))
        .collect::<Result<Vec<_>, _>>()?;
    if steps.is_empty() {
        return Err("no actions".into());
    }
    Trace::new(
        id,
        TraceMetadata::mobile(app),
        steps,
        str_field(r, &["goal", "instruction"]),
    )
    .map_err(|_| "invalid trace".into())
}
