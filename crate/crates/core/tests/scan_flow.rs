//! End-to-end pipeline flows with hand-built models and fixture providers:
//! layer precedence, gray-zone reconciliation, hash and file paths, and
//! bundle round-trips through the scanner.

use securescan_core::bundle::{self, ModelBundle};
use securescan_core::classifier::{self, Calibration, ModelParams};
use securescan_core::corpus::LabeledSample;
use securescan_core::decision::{ConsensusPolicy, DecisionLayer, VerdictLabel};
use securescan_core::features::{file_static_features, SparseVector, Vectorizer, FILE_FEATURE_DIM};
use securescan_core::intel::{fixture_document, url_identifier, IntelClient};
use securescan_core::pipeline::{ScanInput, Scanner};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Vectorizer over two synthetic tokens and a hand-set weight so the probe
/// URL gets an exact decision score.
fn fixed_probability_scanner(p: f64) -> Scanner {
    let v = Vectorizer::fit(&["aaa", "bbb"], 3, 3, 10).unwrap();
    // transform("aaa.com") puts unit mass on "aaa"; score = w = logit(p).
    let logit = (p / (1.0 - p)).ln();
    let model = ModelParams {
        weights: vec![logit, 0.0],
        bias: 0.0,
        c: 1.0,
        calibration: Some(Calibration { a: 1.0, b: 0.0 }),
    };
    Scanner::new(v, model)
}

/// The probe host only exposes the "aaa" trigram to the vectorizer.
const PROBE: &str = "aaa.example-site.com";

#[test]
fn model_layer_blocks_high_probability() {
    let scanner = fixed_probability_scanner(0.80);
    let input = ScanInput::url(PROBE).unwrap();
    let verdict = scanner.scan(&input).unwrap();
    assert_eq!(verdict.label, VerdictLabel::Malicious);
    assert_eq!(verdict.layer, DecisionLayer::Model);
    let p = verdict.probability.unwrap();
    assert!((p - 0.80).abs() < 1e-9, "probability {p}");
}

#[test]
fn model_layer_marks_low_probability_benign() {
    let scanner = fixed_probability_scanner(0.20);
    let verdict = scanner.scan(&ScanInput::url(PROBE).unwrap()).unwrap();
    assert_eq!(verdict.label, VerdictLabel::Benign);
    assert_eq!(verdict.layer, DecisionLayer::Model);
}

#[test]
fn gray_zone_with_clean_report_becomes_safe_verified() {
    let dir = tempfile::tempdir().unwrap();
    let id = url_identifier(PROBE).unwrap();
    std::fs::write(
        dir.path().join(format!("{id}.json")),
        fixture_document(0, 0, 52, 9, &[], 1_700_000_000),
    )
    .unwrap();

    let scanner =
        fixed_probability_scanner(0.50).with_intel(IntelClient::with_mock_fixtures(dir.path()));
    let verdict = scanner.scan(&ScanInput::url(PROBE).unwrap()).unwrap();
    assert_eq!(verdict.label, VerdictLabel::SafeVerified);
    assert_eq!(verdict.layer, DecisionLayer::Intel);
    assert_eq!(verdict.probability, Some(0.5));
    let summary = verdict.intel_summary.unwrap();
    assert_eq!(summary.malicious_engines, 0);
    assert_eq!(summary.harmless_engines, 52);
}

#[test]
fn gray_zone_with_consensus_becomes_malicious() {
    let dir = tempfile::tempdir().unwrap();
    let id = url_identifier(PROBE).unwrap();
    std::fs::write(
        dir.path().join(format!("{id}.json")),
        fixture_document(12, 2, 30, 5, &["phishing"], 1_700_000_000),
    )
    .unwrap();

    let scanner =
        fixed_probability_scanner(0.52).with_intel(IntelClient::with_mock_fixtures(dir.path()));
    let verdict = scanner.scan(&ScanInput::url(PROBE).unwrap()).unwrap();
    assert_eq!(verdict.label, VerdictLabel::Malicious);
    assert_eq!(verdict.layer, DecisionLayer::Intel);
    assert_eq!(verdict.reasons, vec!["confirmed"]);
}

#[test]
fn heuristic_reject_is_never_overridden() {
    // Fixture says clean, model would say benign, but the heuristics reject:
    // layer precedence keeps the heuristic verdict.
    let dir = tempfile::tempdir().unwrap();
    let url = "192.168.0.1/login.php";
    let id = url_identifier(url).unwrap();
    std::fs::write(
        dir.path().join(format!("{id}.json")),
        fixture_document(0, 0, 70, 0, &[], 1),
    )
    .unwrap();

    let scanner =
        fixed_probability_scanner(0.01).with_intel(IntelClient::with_mock_fixtures(dir.path()));
    let verdict = scanner.scan(&ScanInput::url(url).unwrap()).unwrap();
    assert_eq!(verdict.layer, DecisionLayer::Heuristic);
    assert_eq!(verdict.label, VerdictLabel::Malicious);
    assert!(verdict.reasons.contains(&"ip_host".to_string()));
    assert_eq!(scanner.intel().unwrap().provider_calls(), 0, "intel must not be consulted");
}

#[test]
fn hash_scan_consults_intel_directly() {
    let dir = tempfile::tempdir().unwrap();
    let hash = "d".repeat(64);
    std::fs::write(
        dir.path().join(format!("{hash}.json")),
        fixture_document(20, 0, 40, 4, &["trojan"], 1),
    )
    .unwrap();

    let scanner =
        fixed_probability_scanner(0.5).with_intel(IntelClient::with_mock_fixtures(dir.path()));
    let verdict = scanner.scan(&ScanInput::hash(&hash).unwrap()).unwrap();
    assert_eq!(verdict.label, VerdictLabel::Malicious);
    assert_eq!(verdict.layer, DecisionLayer::Intel);
    assert_eq!(verdict.probability, None);

    // Uppercase digests normalize to the same identifier.
    let verdict2 = scanner.scan(&ScanInput::hash(&hash.to_uppercase()).unwrap()).unwrap();
    assert_eq!(verdict2.label, VerdictLabel::Malicious);
    assert_eq!(scanner.intel().unwrap().provider_calls(), 1, "second lookup should hit cache");
}

/// Trains the file-model instance on synthetic binaries: benign inputs are
/// printable text, malicious inputs are high-entropy noise.
fn trained_file_model() -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let words = ["report", "invoice", "minutes", "summary", "notes", "draft"];
    for i in 0..60 {
        let benign: String = (0..40)
            .map(|_| words[rng.gen_range(0..words.len())])
            .collect::<Vec<_>>()
            .join(" ");
        let malicious: Vec<u8> = (0..1600).map(|_| rng.gen::<u8>()).collect();
        if i % 2 == 0 {
            x.push(file_static_features(benign.as_bytes()).to_feature_vector());
            y.push(0u8);
        } else {
            x.push(file_static_features(&malicious).to_feature_vector());
            y.push(1u8);
        }
    }
    let mut model = classifier::train(&x, &y, 10.0).unwrap();
    model.calibration = Some(Calibration { a: 1.0, b: 0.0 });
    model
}

#[test]
fn file_scan_classifies_by_static_features() {
    let scanner = fixed_probability_scanner(0.5).with_file_model(trained_file_model());

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let noise: Vec<u8> = (0..2000).map(|_| rng.gen::<u8>()).collect();
    let verdict = scanner.scan(&ScanInput::file(noise)).unwrap();
    assert_eq!(verdict.label, VerdictLabel::Malicious, "high-entropy noise");
    assert_eq!(verdict.layer, DecisionLayer::Model);
    assert!(!verdict.reasons.is_empty(), "file verdicts name contributing features");

    let text = b"quarterly report with plain readable sentences and numbers 123".repeat(10);
    let verdict = scanner.scan(&ScanInput::file(text.to_vec())).unwrap();
    assert_eq!(verdict.label, VerdictLabel::Benign);
}

#[test]
fn scan_is_deterministic_for_fixed_provider() {
    let dir = tempfile::tempdir().unwrap();
    let id = url_identifier(PROBE).unwrap();
    std::fs::write(dir.path().join(format!("{id}.json")), fixture_document(1, 0, 9, 0, &[], 1))
        .unwrap();
    let scanner =
        fixed_probability_scanner(0.5).with_intel(IntelClient::with_mock_fixtures(dir.path()));
    let input = ScanInput::url(PROBE).unwrap();
    let first = scanner.scan(&input).unwrap();
    let second = scanner.scan(&input).unwrap();
    assert_eq!(first, second);
    assert_eq!(first.label, VerdictLabel::Suspicious); // 0 < 1 engine < K=3
}

#[test]
fn bundle_scanner_roundtrip_preserves_verdicts() {
    let docs = [
        "login-paypal.example.zip/verify",
        "account.update.bank.example.work/",
        "www.wikipedia.org/wiki/ferris",
        "docs.example.org/manual",
    ];
    let labels = [1u8, 1, 0, 0];
    let v = Vectorizer::fit(&docs, 3, 5, 2000).unwrap();
    let x: Vec<SparseVector> = docs.iter().map(|d| v.transform(d)).collect();
    let mut model = classifier::train(&x, &labels, 5.0).unwrap();
    model.calibration = Some(Calibration { a: 1.1, b: 0.05 });

    let mut bundle = ModelBundle::new(v, model);
    bundle.file_model = Some(trained_file_model());
    bundle.metadata.samples = 4;

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bundle.json");
    bundle::save_model(&bundle, &path).unwrap();
    let restored = bundle::load_model(&path).unwrap();

    let scanner_a = bundle.to_scanner();
    let scanner_b = restored.to_scanner();
    for probe in ["www.wikipedia.org/wiki/ferris", "login-paypal.example.zip/verify", "x.org"] {
        let input = ScanInput::url(probe).unwrap();
        // Both scanners run offline; gray zones degrade identically.
        let a = scanner_a.scan(&input).unwrap();
        let b = scanner_b.scan(&input).unwrap();
        assert_eq!(a, b, "verdicts diverged for {probe}");
    }

    // File model survives the round trip too.
    let text = b"plain text goes here and stays readable".repeat(8);
    let a = scanner_a.scan(&ScanInput::file(text.to_vec())).unwrap();
    let b = scanner_b.scan(&ScanInput::file(text.to_vec())).unwrap();
    assert_eq!(a, b);
}

#[test]
fn file_feature_dimensions_are_stable() {
    let f = file_static_features(b"anything");
    assert_eq!(f.to_feature_vector().dim(), FILE_FEATURE_DIM);
}

#[test]
fn strict_not_found_policy_applies_to_scans() {
    // No fixtures at all: every lookup is not-found.
    let dir = tempfile::tempdir().unwrap();
    let strict = ConsensusPolicy { engine_threshold: 3, not_found_suspicious: true };
    let scanner = fixed_probability_scanner(0.5)
        .with_consensus(strict)
        .with_intel(IntelClient::with_mock_fixtures(dir.path()));
    let verdict = scanner.scan(&ScanInput::url(PROBE).unwrap()).unwrap();
    assert_eq!(verdict.label, VerdictLabel::Suspicious);
    assert_eq!(verdict.reasons, vec!["not-found"]);
}
