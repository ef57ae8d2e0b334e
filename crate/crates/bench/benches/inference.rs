//! Single-input inference latency: the end-to-end URL path (normalize,
//! heuristics, vectorize, predict, threshold) and its stages.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use securescan_bench::trained_scanner;
use securescan_core::classifier;
use securescan_core::heuristics::{evaluate_rules, RuleSet};
use securescan_core::pipeline::ScanInput;

fn inference(c: &mut Criterion) {
    let (scanner, probes) = trained_scanner(2000, 42);
    let rules = RuleSet::default();
    let transformed: Vec<_> =
        probes.iter().map(|p| scanner.vectorizer().transform(p)).collect();

    let mut index = 0usize;
    let mut next = move |len: usize| {
        index = (index + 1) % len;
        index
    };

    c.bench_function("scan_url_end_to_end", |b| {
        b.iter(|| {
            let probe = &probes[next(probes.len())];
            let input = ScanInput::url(black_box(probe)).unwrap();
            black_box(scanner.scan(&input).unwrap())
        })
    });

    c.bench_function("heuristics_only", |b| {
        b.iter(|| {
            let probe = &probes[next(probes.len())];
            black_box(evaluate_rules(black_box(probe), &rules))
        })
    });

    c.bench_function("vectorize_only", |b| {
        b.iter(|| {
            let probe = &probes[next(probes.len())];
            black_box(scanner.vectorizer().transform(black_box(probe)))
        })
    });

    c.bench_function("predict_only", |b| {
        b.iter(|| {
            let x = &transformed[next(transformed.len())];
            black_box(classifier::predict_proba(scanner.model(), black_box(x)).unwrap())
        })
    });
}

criterion_group!(benches, inference);
criterion_main!(benches);
