//! Golden prompt files. Run with `UPDATE_GOLDEN=1` to rewrite them after an
//! intended template change, then review the diff.

mod common;

use common::fixture;
use summact::action_model::{read_traces, Trace};
use summact::prompting::{
    build_subgoal_prompt, build_summary_prompt, default_icl_examples, SubGoal, SubGoalAssignment,
};

fn check_golden(rel: &str, actual: &str) {
    let path = fixture(rel);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{rel} differs from the generated prompt");
}

fn trace(file: &str, id: &str) -> Trace {
    read_traces(&fixture(file))
        .unwrap()
        .into_iter()
        .find(|t| t.trace_id == id)
        .unwrap()
}

#[test]
fn subgoal_prompt_golden() {
    let t = trace("traces3.jsonl", "p1");
    let examples = default_icl_examples();
    assert_eq!(examples.len(), 5);
    let prompt = build_subgoal_prompt(&t, &examples).unwrap();
    assert!(!prompt.text.contains(t.gold_intention.as_deref().unwrap()));
    check_golden("prompts/subgoal_p1.golden.txt", &prompt.text);
}

#[test]
fn mobile_metadata_block() {
    let t = trace("traces3.jsonl", "p3");
    let prompt = build_subgoal_prompt(&t, &default_icl_examples()).unwrap();
    let query = prompt.text.rsplit("Calendar").next().unwrap();
    assert!(prompt.text.contains("App: Calendar"));
    assert!(!query.contains("Website:"));
}

#[test]
fn summary_prompt_golden() {
    let t = trace(
        "trace7.jsonl",
        &read_traces(&fixture("trace7.jsonl")).unwrap()[0].trace_id,
    );
    let sg = |label: &str, first_action, last_action| SubGoal {
        label: label.into(),
        first_action,
        last_action,
    };
    let subgoals = SubGoalAssignment {
        entries: vec![
            sg("Find the restaurant", 1, 2),
            sg("Set party size, date and time", 3, 5),
            sg("Pick a reservation slot", 6, 7),
        ],
    };
    let prompt = build_summary_prompt(&t, &subgoals).unwrap();
    assert_eq!(build_summary_prompt(&t, &subgoals).unwrap().text, prompt.text);
    check_golden("prompts/summary_trace7.golden.txt", &prompt.text);
}
