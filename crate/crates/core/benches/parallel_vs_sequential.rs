use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use summact::backends::MockBackend;
use summact::exec::Execution;
use summact::metrics::evaluate_summaries;
use summact::retrieval::{build_index, query};
use summact::synonyms::{mine_synonyms, SubSequence};
use summact::toy_lm::{lambda_benchmark, synthetic_corpus, SyntheticSpec, TrainConfig};

const WORDS: [&str; 16] = [
    "book", "flight", "hotel", "cheap", "search", "jobs", "london", "add", "cart", "red", "jacket", "find", "campsite",
    "table", "event", "calendar",
];

fn sentence(i: usize, len: usize) -> String {
    (0..len)
        .map(|j| WORDS[(i * 7 + j * 3 + i / 5) % WORDS.len()])
        .collect::<Vec<_>>()
        .join(" ")
}

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    #[cfg(feature = "parallel")]
    m.push(("parallel", Execution::Parallel));
    m
}

fn bench_evaluate(c: &mut Criterion) {
    let pairs: Vec<(String, String)> = (0..400).map(|i| (sentence(i, 9), sentence(i + 1, 11))).collect();
    let mock = MockBackend::new(Vec::new());
    let mut g = c.benchmark_group("evaluate_summaries_400");
    for (name, exec) in modes() {
        g.bench_function(name, |b| {
            b.iter(|| evaluate_summaries(black_box(&pairs), &mock, "bench", exec).unwrap())
        });
    }
    g.finish();
}

fn bench_mine(c: &mut Criterion) {
    let subs: Vec<SubSequence> = (0..600)
        .map(|i| {
            let summary = sentence(i % 97, 6);
            SubSequence {
                parent_trace_id: format!("t{}", i / 20),
                start: i % 20 + 1,
                end: i % 20 + 2,
                embedding: MockBackend::embed_one(&summary),
                summary,
            }
        })
        .collect();
    let mut g = c.benchmark_group("mine_synonyms_600");
    for (name, exec) in modes() {
        g.bench_function(name, |b| b.iter(|| mine_synonyms(black_box(&subs), 0.8, exec).unwrap()));
    }
    g.finish();
}

fn bench_query(c: &mut Criterion) {
    let records: Vec<(String, String)> = (0..20_000).map(|i| (format!("r{i:05}"), sentence(i, 8))).collect();
    let mock = MockBackend::new(Vec::new());
    let index = build_index(&records, &mock).unwrap();
    let mut g = c.benchmark_group("index_query_20k");
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| query(&index, black_box("book a cheap flight to london"), 10, &mock, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_lambda(c: &mut Criterion) {
    let spec = SyntheticSpec::default();
    let (train_set, eval) = (synthetic_corpus(&spec, 40, 42), synthetic_corpus(&spec, 10, 7));
    let cfg = TrainConfig {
        epochs: 2,
        ..TrainConfig::default()
    };
    let mut g = c.benchmark_group("lambda_benchmark_small");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(name, |b| {
            b.iter(|| lambda_benchmark(&train_set, &eval, &cfg, &[1.0, 2.0], &[0, 1], exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_evaluate, bench_mine, bench_query, bench_lambda);
criterion_main!(benches);
