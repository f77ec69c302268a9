mod common;

use std::time::Instant;

use common::{cli, fixture, p, read_fixture};
use summact::action_model::{read_traces, render_trace, Operation, Trace, TraceMetadata, UiElement};

fn shopping_trace() -> Trace {
    let steps = vec![
        (UiElement::new("button", "Add to Cart", None).unwrap(), Operation::Click),
        (
            UiElement::new("combobox", "Sort By", Some("Price Low to High")).unwrap(),
            Operation::Select,
        ),
        (
            UiElement::new("searchbox", "Search", Some("Johannesburg")).unwrap(),
            Operation::Type,
        ),
    ];
    Trace::new("t3", TraceMetadata::web("shop"), steps, None).unwrap()
}

#[test]
fn three_reference_actions() {
    assert_eq!(
        render_trace(&shopping_trace()),
        [
            r#"Click the button element with text "Add to Cart" on it"#,
            r#"Select "Price Low to High" from combobox with text "Sort By" on it"#,
            r#"Type text "Johannesburg" into searchbox with text "Search" on it"#,
        ]
    );
}

#[test]
fn seven_action_golden() {
    let traces = read_traces(&fixture("trace7.jsonl")).unwrap();
    let lines = render_trace(&traces[0]);
    assert_eq!(lines.join("\n") + "\n", read_fixture("trace7.golden.txt"));
}

#[test]
fn fifty_trace_golden_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rendered.jsonl");
    let t0 = Instant::now();
    assert_eq!(
        cli(&[
            "template",
            "--traces",
            &p(&fixture("traces50.jsonl")),
            "--out",
            &p(&out)
        ]),
        0
    );
    assert!(t0.elapsed().as_secs_f64() < 1.0);
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(fixture("traces50.rendered.jsonl")).unwrap()
    );
}
