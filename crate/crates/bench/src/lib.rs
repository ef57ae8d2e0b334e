//! Shared setup for the inference benchmarks: a trained scanner over a
//! seeded synthetic corpus plus heuristic-passing probe URLs.

use securescan_core::classifier::{self, Calibration};
use securescan_core::features::{SparseVector, Vectorizer};
use securescan_core::heuristics::{evaluate_rules, HeuristicDecision, RuleSet};
use securescan_core::pipeline::Scanner;
use securescan_core::synthetic::{self, BenchmarkSpec};

/// Trains a calibrated scanner on `samples` synthetic URLs and returns it
/// with probe URLs that pass the heuristic layer (so benchmarks measure the
/// full model path).
pub fn trained_scanner(samples: usize, seed: u64) -> (Scanner, Vec<String>) {
    let spec = BenchmarkSpec { samples, seed, ..Default::default() };
    let corpus = synthetic::generate(&spec);
    let texts: Vec<&str> = corpus.iter().map(|s| s.text.as_str()).collect();
    let vectorizer = Vectorizer::fit_default(&texts).expect("corpus is non-empty");
    let x: Vec<SparseVector> = corpus.iter().map(|s| vectorizer.transform(&s.text)).collect();
    let y: Vec<u8> = corpus.iter().map(|s| s.label).collect();
    let mut model = classifier::train(&x, &y, 1.0).expect("both classes present");
    model.calibration = Some(Calibration { a: 1.0, b: 0.0 });

    let rules = RuleSet::default();
    let probes: Vec<String> = corpus
        .iter()
        .filter(|s| evaluate_rules(&s.text, &rules).decision == HeuristicDecision::Pass)
        .take(256)
        .map(|s| s.text.clone())
        .collect();
    (Scanner::new(vectorizer, model), probes)
}
