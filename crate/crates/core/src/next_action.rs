//! Next-action forecasting as multiple choice over ranked page elements.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attention::tokenize;
use crate::backends::{BackendError, GenerationParams, TextGenerator};
use crate::prompting::{PromptKind, PromptText};

pub const DEFAULT_K: usize = 50;
pub const MIN_HISTORY: usize = 5;
pub const NONE_OF_ABOVE: &str = "NONE_OF_ABOVE";

#[derive(Debug, Error)]
pub enum NextActionError {
    #[error("behaviour history has {len} actions, at least {MIN_HISTORY} are required")]
    HistoryTooShort { len: usize },
    #[error("page has no elements")]
    EmptyPage,
    #[error("no candidates to choose from")]
    NoCandidates,
    #[error("retention cap k must be at least 1")]
    InvalidK,
    #[error("{preds} predictions but {golds} gold labels")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("invalid page {page}: {message}")]
    InvalidPage { page: String, message: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageElement {
    pub element_id: String,
    pub category: String,
    pub text: String,
    pub dom_order: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub page_id: String,
    pub elements: Vec<PageElement>,
}

impl Page {
    pub fn validate(&self) -> Result<(), NextActionError> {
        let bad = |message: String| NextActionError::InvalidPage {
            page: self.page_id.clone(),
            message,
        };
        let mut ids = HashSet::new();
        let mut orders = HashSet::new();
        for e in &self.elements {
            if !ids.insert(e.element_id.as_str()) {
                return Err(bad(format!("duplicate element_id {:?}", e.element_id)));
            }
            if !orders.insert(e.dom_order) {
                return Err(bad(format!("duplicate dom_order {}", e.dom_order)));
            }
        }
        Ok(())
    }
}

pub fn read_page(path: &Path) -> Result<Page, NextActionError> {
    let io = |message: String| NextActionError::Io {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
    let page: Page = serde_json::from_str(&text).map_err(|e| io(e.to_string()))?;
    page.validate()?;
    Ok(page)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub candidates: Vec<(PageElement, f64)>,
    pub k: usize,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NextOperation {
    Click,
    Select,
    Type,
}

impl NextOperation {
    pub const ALL: [NextOperation; 3] = [NextOperation::Click, NextOperation::Select, NextOperation::Type];

    pub fn as_str(self) -> &'static str {
        match self {
            NextOperation::Click => "CLICK",
            NextOperation::Select => "SELECT",
            NextOperation::Type => "TYPE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.as_str().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextActionPrediction {
    pub element_id: String,
    pub operation: NextOperation,
    /// Set when the response could not be parsed and the prediction fell
    /// back to none-of-the-above.
    pub degraded: bool,
}

impl NextActionPrediction {
    pub fn none_of_above() -> Self {
        NextActionPrediction {
            element_id: NONE_OF_ABOVE.into(),
            operation: NextOperation::Click,
            degraded: true,
        }
    }
}

/// One line of prediction output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub element_id: String,
    pub operation: NextOperation,
    pub degraded: bool,
}

fn term_counts(text: &str) -> BTreeMap<String, f64> {
    let mut counts = BTreeMap::new();
    for t in tokenize(text).tokens {
        *counts.entry(t).or_insert(0.0) += 1.0;
    }
    counts
}

fn history_tail<S: AsRef<str>>(history: &[S]) -> &[S] {
    &history[history.len().saturating_sub(MIN_HISTORY)..]
}

/// Ranks page elements by TF-IDF cosine against the summary plus the last
/// five history actions and keeps the best `k`.
///
/// Element documents are `text + category`. IDF is computed over the page:
/// `ln((1 + N) / (1 + df)) + 1`. Equal scores are ordered by `dom_order`.
pub fn extract_candidates<S: AsRef<str>>(
    page: &[PageElement],
    history: &[S],
    summary: &str,
    k: usize,
) -> Result<CandidateSet, NextActionError> {
    if k == 0 {
        return Err(NextActionError::InvalidK);
    }
    if page.is_empty() {
        return Err(NextActionError::EmptyPage);
    }
    if history.len() < MIN_HISTORY {
        return Err(NextActionError::HistoryTooShort { len: history.len() });
    }
    let docs: Vec<BTreeMap<String, f64>> = page
        .iter()
        .map(|e| term_counts(&format!("{} {}", e.text, e.category)))
        .collect();
    let mut df: BTreeMap<&str, f64> = BTreeMap::new();
    for d in &docs {
        for t in d.keys() {
            *df.entry(t.as_str()).or_insert(0.0) += 1.0;
        }
    }
    let n = page.len() as f64;
    let idf = |t: &str| ((1.0 + n) / (1.0 + df.get(t).copied().unwrap_or(0.0))).ln() + 1.0;

    let mut query_text = summary.to_string();
    for h in history_tail(history) {
        query_text.push(' ');
        query_text.push_str(h.as_ref());
    }
    let query: BTreeMap<String, f64> = term_counts(&query_text)
        .into_iter()
        .map(|(t, c)| {
            let w = c * idf(&t);
            (t, w)
        })
        .collect();
    let q_norm = query.values().map(|w| w * w).sum::<f64>().sqrt();

    let mut scored: Vec<(PageElement, f64)> = page
        .iter()
        .zip(&docs)
        .map(|(e, d)| {
            let mut dot = 0.0;
            let mut norm = 0.0;
            for (t, c) in d {
                let w = c * idf(t);
                norm += w * w;
                if let Some(qw) = query.get(t) {
                    dot += w * qw;
                }
            }
            let denom = norm.sqrt() * q_norm;
            let score = if denom > 0.0 { dot / denom } else { 0.0 };
            (e.clone(), score)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.dom_order.cmp(&b.0.dom_order)));
    scored.truncate(k);
    Ok(CandidateSet { candidates: scored, k })
}

/// Choice labels: A..Z, then AA, AB, ...
pub fn choice_label(index: usize) -> String {
    let mut n = index + 1;
    let mut out = Vec::new();
    while n > 0 {
        n -= 1;
        out.push(b'A' + (n % 26) as u8);
        n /= 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

fn label_index(label: &str) -> Option<usize> {
    if label.is_empty() || !label.bytes().all(|b| b.is_ascii_uppercase()) {
        return None;
    }
    let mut n = 0usize;
    for b in label.bytes() {
        n = n.checked_mul(26)?.checked_add((b - b'A') as usize + 1)?;
    }
    Some(n - 1)
}

const NEXT_ACTION_FRAMING: &str = "\
You are predicting the next action a user will perform on a web page. You are \
given the actions the user has already performed, the elements of the current \
page that are candidate targets, and a summary of the user's intention. Pick \
the element the user will interact with next and the operation they will \
perform on it. The allowed operations are CLICK, SELECT and TYPE.
";

const NEXT_ACTION_OUTPUT_FORMAT: &str = "\
Answer with a single line of the form:
ANSWER: <letter> <OPERATION>
";

pub fn build_next_action_prompt<S: AsRef<str>>(
    history: &[S],
    summary: &str,
    candidates: &CandidateSet,
) -> Result<PromptText, NextActionError> {
    if candidates.is_empty() {
        return Err(NextActionError::NoCandidates);
    }
    if history.len() < MIN_HISTORY {
        return Err(NextActionError::HistoryTooShort { len: history.len() });
    }
    let mut out = String::from(NEXT_ACTION_FRAMING);
    out.push_str("\nPrevious actions:\n");
    for (i, h) in history.iter().enumerate() {
        let _ = writeln!(out, "{}. {}", i + 1, h.as_ref());
    }
    out.push_str("\nCandidate elements:\n");
    for (i, (e, _)) in candidates.candidates.iter().enumerate() {
        let _ = writeln!(out, "{}. <{}> {}", choice_label(i), e.category, e.text);
    }
    let _ = writeln!(out, "\nIntention: {summary}\n");
    out.push_str(NEXT_ACTION_OUTPUT_FORMAT);
    Ok(PromptText {
        text: out,
        kind: PromptKind::NextAction,
    })
}

/// Reads the first `ANSWER: <letter> <OPERATION>` line. Anything else maps
/// to none-of-the-above.
pub fn parse_answer(response: &str, candidates: &CandidateSet) -> NextActionPrediction {
    for line in response.lines() {
        let line = line.trim();
        let Some(head) = line.get(..7) else { continue };
        if !head.eq_ignore_ascii_case("ANSWER:") {
            continue;
        }
        let mut parts = line[7..].split_whitespace();
        let (Some(letter), Some(op)) = (parts.next(), parts.next()) else {
            break;
        };
        let letter = letter.trim_end_matches(['.', ',', ')']);
        let op = op.trim_end_matches(['.', ',']);
        if let (Some(i), Some(operation)) = (label_index(letter), NextOperation::parse(op)) {
            if let Some((e, _)) = candidates.candidates.get(i) {
                return NextActionPrediction {
                    element_id: e.element_id.clone(),
                    operation,
                    degraded: false,
                };
            }
        }
        break;
    }
    log::warn!("unparseable next-action response, falling back to {NONE_OF_ABOVE}");
    NextActionPrediction::none_of_above()
}

pub fn predict_next<S: AsRef<str>>(
    history: &[S],
    summary: &str,
    candidates: &CandidateSet,
    backend: &dyn TextGenerator,
    params: &GenerationParams,
) -> Result<NextActionPrediction, NextActionError> {
    let prompt = build_next_action_prompt(history, summary, candidates)?;
    let response = backend.generate(&prompt, params)?;
    Ok(parse_answer(&response, candidates))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionScores {
    pub element_accuracy: f64,
    pub operation_macro_f1: f64,
}

/// Element accuracy and macro F1 over the operation classes that occur in
/// either predictions or gold labels.
pub fn evaluate_predictions(
    preds: &[NextActionPrediction],
    golds: &[(String, NextOperation)],
) -> Result<PredictionScores, NextActionError> {
    if preds.len() != golds.len() {
        return Err(NextActionError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    if preds.is_empty() {
        return Err(NextActionError::EmptyInput);
    }
    let hits = preds.iter().zip(golds).filter(|(p, g)| p.element_id == g.0).count();
    let mut f1s = Vec::new();
    for class in NextOperation::ALL {
        let mut tp = 0.0;
        let mut fp = 0.0;
        let mut fn_ = 0.0;
        for (p, g) in preds.iter().zip(golds) {
            match (p.operation == class, g.1 == class) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
                (false, false) => {}
            }
        }
        if tp + fp + fn_ == 0.0 {
            continue;
        }
        f1s.push(2.0 * tp / (2.0 * tp + fp + fn_));
    }
    Ok(PredictionScores {
        element_accuracy: hits as f64 / preds.len() as f64,
        operation_macro_f1: f1s.iter().sum::<f64>() / f1s.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::MockBackend;
    use crate::backends::MockRule;
    use proptest::prelude::*;

    fn el(id: &str, cat: &str, text: &str, order: usize) -> PageElement {
        PageElement {
            element_id: id.into(),
            category: cat.into(),
            text: text.into(),
            dom_order: order,
        }
    }

    fn history() -> Vec<String> {
        (1..=5)
            .map(|i| format!("Click the button element with text \"step {i}\" on it"))
            .collect()
    }

    fn pred(id: &str, op: NextOperation) -> NextActionPrediction {
        NextActionPrediction {
            element_id: id.into(),
            operation: op,
            degraded: false,
        }
    }

    #[test]
    fn labels_round_trip() {
        assert_eq!(choice_label(0), "A");
        assert_eq!(choice_label(25), "Z");
        assert_eq!(choice_label(26), "AA");
        assert_eq!(choice_label(49), "AX");
        for i in 0..800 {
            assert_eq!(label_index(&choice_label(i)), Some(i));
        }
        assert_eq!(label_index("a"), None);
    }

    #[test]
    fn preconditions() {
        let page = vec![el("a", "button", "x", 0)];
        let short: Vec<String> = history()[..4].to_vec();
        assert!(matches!(
            extract_candidates(&page, &short, "", 5),
            Err(NextActionError::HistoryTooShort { len: 4 })
        ));
        assert!(matches!(
            extract_candidates::<String>(&[], &history(), "", 5),
            Err(NextActionError::EmptyPage)
        ));
        assert!(matches!(
            extract_candidates(&page, &history(), "", 0),
            Err(NextActionError::InvalidK)
        ));
    }

    #[test]
    fn ties_follow_dom_order() {
        let page = vec![
            el("b", "link", "zzz", 3),
            el("a", "link", "yyy", 1),
            el("c", "link", "www", 2),
        ];
        let c = extract_candidates(&page, &history(), "unrelated", 50).unwrap();
        let ids: Vec<&str> = c.candidates.iter().map(|(e, _)| e.element_id.as_str()).collect();
        assert_eq!(ids, ["a", "c", "b"]);
        assert!(c.candidates.iter().all(|(_, s)| *s == 0.0));
    }

    #[test]
    fn retention_cap() {
        let page: Vec<PageElement> = (0..80)
            .map(|i| el(&format!("e{i}"), "button", &format!("item {i}"), i))
            .collect();
        assert_eq!(
            extract_candidates(&page, &history(), "item", DEFAULT_K).unwrap().len(),
            50
        );
        assert_eq!(extract_candidates(&page, &history(), "item", 3).unwrap().len(), 3);
    }

    #[test]
    fn answer_parsing() {
        let page = vec![
            el("a", "button", "one", 0),
            el("b", "button", "two", 1),
            el("c", "button", "three", 2),
        ];
        let c = extract_candidates(&page, &history(), "two", 50).unwrap();
        let second = c.candidates[1].0.element_id.clone();
        assert_eq!(parse_answer("ANSWER: B CLICK", &c), pred(&second, NextOperation::Click));
        assert_eq!(parse_answer("reasoning\nanswer: b. type", &c).element_id, NONE_OF_ABOVE);
        assert_eq!(parse_answer("Answer: C select.", &c).operation, NextOperation::Select);
        let none = parse_answer("I think the user wants to click", &c);
        assert_eq!(none, NextActionPrediction::none_of_above());
        assert!(none.degraded);
        assert_eq!(parse_answer("ANSWER: D CLICK", &c).element_id, NONE_OF_ABOVE);
        assert_eq!(parse_answer("ANSWER: A SWIPE", &c).element_id, NONE_OF_ABOVE);
    }

    #[test]
    fn predict_with_mock() {
        let page = vec![
            el("a", "button", "one", 0),
            el("b", "button", "two", 1),
            el("c", "button", "three", 2),
        ];
        let c = extract_candidates(&page, &history(), "two", 50).unwrap();
        let mock = MockBackend::new(vec![MockRule::new("Candidate elements", "ANSWER: A TYPE")]);
        let p = predict_next(&history(), "two", &c, &mock, &GenerationParams::default()).unwrap();
        assert_eq!(p, pred(&c.candidates[0].0.element_id, NextOperation::Type));
        assert_eq!(c.candidates[0].0.element_id, "b");
    }

    #[test]
    fn evaluation_cases() {
        use NextOperation::*;
        let golds = vec![
            ("a".to_string(), Click),
            ("b".into(), Select),
            ("c".into(), Select),
            ("d".into(), Type),
        ];
        let preds = vec![pred("a", Click), pred("b", Click), pred("c", Select), pred("x", Type)];
        let s = evaluate_predictions(&preds, &golds).unwrap();
        assert_eq!(s.element_accuracy, 0.75);
        assert!((s.operation_macro_f1 - 7.0 / 9.0).abs() < 1e-12);
        let perfect: Vec<_> = golds.iter().map(|(id, op)| pred(id, *op)).collect();
        let s = evaluate_predictions(&perfect, &golds).unwrap();
        assert_eq!((s.element_accuracy, s.operation_macro_f1), (1.0, 1.0));
        assert!(matches!(
            evaluate_predictions(&preds[..2], &golds),
            Err(NextActionError::LengthMismatch { .. })
        ));
        assert!(matches!(
            evaluate_predictions(&[], &[]),
            Err(NextActionError::EmptyInput)
        ));
    }

    #[test]
    fn page_validation() {
        let p = Page {
            page_id: "p".into(),
            elements: vec![el("a", "x", "y", 0), el("a", "x", "z", 1)],
        };
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariant(texts in prop::collection::vec("[a-d]{1,2}( [a-d]{1,2}){0,2}", 1..12), q in "[a-d]{1,2}( [a-d]{1,2}){0,3}", k in 1usize..15, rot in 0usize..12) {
            let page: Vec<PageElement> = texts.iter().enumerate().map(|(i, t)| el(&format!("e{i}"), "button", t, i)).collect();
            let a = extract_candidates(&page, &history(), &q, k).unwrap();
            let mut rotated = page.clone();
            rotated.rotate_left(rot % page.len());
            rotated.reverse();
            let b = extract_candidates(&rotated, &history(), &q, k).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.len(), k.min(page.len()));
            for w in a.candidates.windows(2) {
                prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0.dom_order < w[1].0.dom_order));
            }
        }

        #[test]
        fn evaluation_permutation_equivariant(rows in prop::collection::vec((0u8..4, 0usize..3, 0u8..4, 0usize..3), 1..20), rot in 0usize..20) {
            let ops = NextOperation::ALL;
            let preds: Vec<_> = rows.iter().map(|r| pred(&r.0.to_string(), ops[r.1])).collect();
            let golds: Vec<_> = rows.iter().map(|r| (r.2.to_string(), ops[r.3])).collect();
            let a = evaluate_predictions(&preds, &golds).unwrap();
            let (mut p2, mut g2) = (preds.clone(), golds.clone());
            p2.rotate_left(rot % rows.len());
            g2.rotate_left(rot % rows.len());
            let b = evaluate_predictions(&p2, &g2).unwrap();
            prop_assert!((a.element_accuracy - b.element_accuracy).abs() < 1e-12);
            prop_assert!((a.operation_macro_f1 - b.operation_macro_f1).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a.operation_macro_f1));
        }
    }
}
