mod common;

use std::collections::HashMap;

use common::{cli, fixture, p, read_fixture};
use serde_json::Value;
use summact::action_model::{read_traces, Trace};
use summact::backends::{BackendError, GenerationParams, MockBackend, TextGenerator};
use summact::exec::Execution;
use summact::prompting::PromptText;
use summact::synonyms::{
    build_report, classify_synonym, efficiency, mine_synonyms, segment_windows, summarise_windows, Shorter,
    SubSequence, SynonymError, SynonymType, DEFAULT_THETA, MIN_WINDOW,
};

fn traces() -> Vec<Trace> {
    read_traces(&fixture("synonyms/traces.jsonl")).unwrap()
}

fn windows() -> Vec<SubSequence> {
    let raw: Vec<Value> = serde_json::from_str(&read_fixture("synonyms/windows.json")).unwrap();
    raw.iter()
        .map(|w| {
            let summary = w["summary"].as_str().unwrap().to_string();
            SubSequence {
                parent_trace_id: w["trace_id"].as_str().unwrap().into(),
                start: w["start"].as_u64().unwrap() as usize,
                end: w["end"].as_u64().unwrap() as usize,
                embedding: MockBackend::embed_one(&summary),
                summary,
            }
        })
        .collect()
}

fn find<'a>(subs: &'a [SubSequence], id: &str, start: usize, end: usize) -> &'a SubSequence {
    subs.iter()
        .find(|s| s.parent_trace_id == id && s.start == start && s.end == end)
        .unwrap()
}

#[test]
fn window_count_closed_form() {
    for n in 2..=20usize {
        let got = segment_windows(n, MIN_WINDOW, n).unwrap().len();
        let closed: usize = (MIN_WINDOW..=n).map(|l| n - l + 1).sum();
        assert_eq!(got, closed);
        assert_eq!(got, n * (n - 1) / 2);
    }
}

#[test]
fn three_kinds_of_synonym() {
    let traces = traces();
    let lookup: HashMap<&str, &Trace> = traces.iter().map(|t| (t.trace_id.as_str(), t)).collect();
    let subs = windows();

    let (indeed, govuk) = (find(&subs, "jobs-indeed", 1, 3), find(&subs, "jobs-govuk", 1, 6));
    assert_eq!(
        classify_synonym(indeed, govuk, &lookup).unwrap(),
        SynonymType::DiffUiDiffActions
    );
    let e = efficiency(indeed, govuk);
    assert_eq!((e.len_a, e.len_b, e.shorter, e.delta), (3, 6, Shorter::A, 3));

    let (short, long) = (find(&subs, "list-short", 1, 4), find(&subs, "list-long", 1, 6));
    assert_eq!(
        classify_synonym(short, long, &lookup).unwrap(),
        SynonymType::SameUiDiffActions
    );

    let (kayak, expedia) = (find(&subs, "flight-kayak", 1, 5), find(&subs, "flight-expedia", 1, 5));
    assert_eq!(
        classify_synonym(kayak, expedia, &lookup).unwrap(),
        SynonymType::DiffUiSameActions
    );
    assert_eq!(efficiency(kayak, expedia).shorter, Shorter::Equal);

    assert!(matches!(
        classify_synonym(short, short, &lookup),
        Err(SynonymError::SameUiSameActions { .. })
    ));
}

#[test]
fn mined_pairs_and_report() {
    let traces = traces();
    let subs = windows();
    let pairs = mine_synonyms(&subs, DEFAULT_THETA, Execution::default()).unwrap();
    assert_eq!(
        pairs,
        mine_synonyms(&subs, DEFAULT_THETA, Execution::Sequential).unwrap()
    );
    let report = build_report(&subs, &pairs, &traces).unwrap();
    let key =
        |r: &summact::synonyms::SynonymReportEntry| (r.trace_a.clone(), r.window_a, r.trace_b.clone(), r.window_b);
    let by_key: HashMap<_, _> = report.iter().map(|r| (key(r), r)).collect();
    let jobs = by_key[&("jobs-govuk".to_string(), [1, 6], "jobs-indeed".to_string(), [1, 3])];
    assert_eq!(jobs.synonym_type, Some(SynonymType::DiffUiDiffActions));
    assert_eq!(jobs.efficiency.delta, 3);
    assert_eq!(jobs.efficiency.shorter, Shorter::B);
    let lists = by_key[&("list-long".to_string(), [1, 6], "list-short".to_string(), [1, 4])];
    assert_eq!(lists.synonym_type, Some(SynonymType::SameUiDiffActions));
    let flights = by_key[&("flight-expedia".to_string(), [1, 5], "flight-kayak".to_string(), [1, 5])];
    assert_eq!(flights.synonym_type, Some(SynonymType::DiffUiSameActions));
    // overlapping windows of one trace never pair up
    for r in &report {
        if r.trace_a == r.trace_b {
            assert!(r.window_a[1] < r.window_b[0] || r.window_b[1] < r.window_a[0]);
        }
    }
    for w in pairs.windows(2) {
        assert!(w[0].similarity >= w[1].similarity);
    }
}

#[test]
fn threshold_monotonicity() {
    let subs = windows();
    let mut prev: Option<Vec<(usize, usize)>> = None;
    for theta in [0.05, 0.2, 0.4, 0.6, 0.8, 0.9, 0.99, 1.0] {
        let mut cur: Vec<(usize, usize)> = mine_synonyms(&subs, theta, Execution::default())
            .unwrap()
            .iter()
            .map(|p| (p.a, p.b))
            .collect();
        cur.sort();
        if let Some(prev) = &prev {
            assert!(
                cur.iter().all(|x| prev.binary_search(x).is_ok()),
                "theta {theta} added pairs"
            );
        }
        prev = Some(cur);
    }
    let distinct: Vec<SubSequence> = {
        let mut seen = std::collections::HashSet::new();
        subs.into_iter().filter(|s| seen.insert(s.summary.clone())).collect()
    };
    assert!(mine_synonyms(&distinct, 1.0, Execution::default()).unwrap().is_empty());
    assert!(mine_synonyms(&distinct, 0.0, Execution::default()).is_err());
}

/// Echoes the window's rendered actions back as its summary, except that the
/// two full job-search windows share one summary.
struct EchoGenerator;

impl TextGenerator for EchoGenerator {
    fn generate(&self, prompt: &PromptText, _params: &GenerationParams) -> Result<String, BackendError> {
        let t = &prompt.text;
        if (t.contains("\"Countries\"") && t.contains("3. Click the link element with text \"Jobs in Essex\""))
            || (t.contains("1. Click the link element with text \"Find a job\"") && t.contains("6. Click"))
        {
            return Ok("Intention: Search for jobs in a city".into());
        }
        let actions: Vec<&str> = t
            .lines()
            .filter(|l| l.starts_with(|c: char| c.is_ascii_digit()))
            .collect();
        Ok(format!("Intention: {}", actions.join("; ")))
    }
}

#[test]
fn summarised_windows_find_the_job_search_pair() {
    let traces = traces();
    let mock = MockBackend::new(Vec::new());
    let subs = summarise_windows(
        &traces,
        &EchoGenerator,
        &mock,
        &GenerationParams::default(),
        Execution::default(),
    )
    .unwrap();
    let expected: usize = traces.iter().map(|t| t.len() * (t.len() - 1) / 2).sum();
    assert_eq!(subs.len(), expected);
    let pairs = mine_synonyms(&subs, 0.999, Execution::default()).unwrap();
    let report = build_report(&subs, &pairs, &traces).unwrap();
    let jobs: Vec<_> = report.iter().filter(|r| r.trace_a.starts_with("jobs")).collect();
    assert_eq!(jobs.len(), 1);
    assert_eq!((jobs[0].window_a, jobs[0].window_b), ([1, 6], [1, 3]));
    assert_eq!(jobs[0].efficiency.delta, 3);
    assert!(report.iter().any(|r| r.trace_a == "flight-expedia"
        && r.window_a == [1, 5]
        && r.synonym_type == Some(SynonymType::DiffUiSameActions)));
}

#[test]
fn synonyms_command_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("syn.json");
    let code = cli(&[
        "synonyms",
        "--traces",
        &p(&fixture("synonyms/traces.jsonl")),
        "--out",
        &p(&out),
        "--theta",
        "0.9",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v.as_array().is_some_and(|a| !a.is_empty()));
    assert_eq!(
        cli(&[
            "synonyms",
            "--traces",
            &p(&fixture("synonyms/traces.jsonl")),
            "--out",
            &p(&out),
            "--theta",
            "1.5"
        ]),
        1
    );
}
