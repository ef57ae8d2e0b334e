//! Model persistence: a versioned JSON envelope whose payload carries the
//! vectorizer, model parameters, threshold policy, and training metadata,
//! protected by a SHA-256 digest. Loading fails closed on future format
//! versions and on any digest or payload mismatch.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classifier::ModelParams;
use crate::corpus::LabeledSample;
use crate::decision::ThresholdPolicy;
use crate::features::Vectorizer;
use crate::pipeline::Scanner;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("bundle format_version {found} is newer than supported {supported}")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("bundle is corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Provenance recorded at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    /// SHA-256 over the normalized training samples.
    pub corpus_digest: String,
    pub samples: u64,
    pub benign: u64,
    pub malicious: u64,
    pub best_c: f64,
    pub cv_mean_f1: f64,
    pub cv_mean_balanced_accuracy: f64,
}

impl Default for TrainingMetadata {
    fn default() -> Self {
        Self {
            corpus_digest: String::new(),
            samples: 0,
            benign: 0,
            malicious: 0,
            best_c: 1.0,
            cv_mean_f1: 0.0,
            cv_mean_balanced_accuracy: 0.0,
        }
    }
}

/// Everything needed to reproduce predictions exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelBundle {
    pub created_at_unix: u64,
    pub vectorizer: Vectorizer,
    pub model: ModelParams,
    #[serde(default)]
    pub file_model: Option<ModelParams>,
    pub thresholds: ThresholdPolicy,
    pub metadata: TrainingMetadata,
}

impl ModelBundle {
    pub fn new(vectorizer: Vectorizer, model: ModelParams) -> Self {
        Self {
            created_at_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            vectorizer,
            model,
            file_model: None,
            thresholds: ThresholdPolicy::default(),
            metadata: TrainingMetadata::default(),
        }
    }

    /// Builds a scanner from this bundle's parameters (intel client and rule
    /// overrides attach via the scanner's builder methods).
    pub fn to_scanner(&self) -> Scanner {
        let mut scanner = Scanner::new(self.vectorizer.clone(), self.model.clone())
            .with_thresholds(self.thresholds);
        if let Some(file_model) = &self.file_model {
            scanner = scanner.with_file_model(file_model.clone());
        }
        scanner
    }
}

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format_version: u32,
    digest: String,
    payload: &'a RawValue,
}

#[derive(Deserialize)]
struct EnvelopeIn<'a> {
    format_version: u32,
    digest: String,
    #[serde(borrow)]
    payload: &'a RawValue,
}

/// Serializes a bundle to its envelope document.
pub fn to_document(bundle: &ModelBundle) -> Result<String, BundleError> {
    let payload =
        serde_json::to_string(bundle).map_err(|e| BundleError::Corrupt(e.to_string()))?;
    let digest = sha256_hex(payload.as_bytes());
    let raw = RawValue::from_string(payload).map_err(|e| BundleError::Corrupt(e.to_string()))?;
    let envelope =
        EnvelopeOut { format_version: BUNDLE_FORMAT_VERSION, digest, payload: &raw };
    serde_json::to_string_pretty(&envelope).map_err(|e| BundleError::Corrupt(e.to_string()))
}

/// Parses an envelope document, checking version and digest before touching
/// the payload.
pub fn from_document(document: &str) -> Result<ModelBundle, BundleError> {
    let envelope: EnvelopeIn<'_> =
        serde_json::from_str(document).map_err(|e| BundleError::Corrupt(e.to_string()))?;
    if envelope.format_version > BUNDLE_FORMAT_VERSION {
        return Err(BundleError::VersionMismatch {
            found: envelope.format_version,
            supported: BUNDLE_FORMAT_VERSION,
        });
    }
    let payload_bytes = envelope.payload.get().as_bytes();
    let digest = sha256_hex(payload_bytes);
    if digest != envelope.digest {
        return Err(BundleError::Corrupt("payload digest mismatch".into()));
    }
    serde_json::from_str(envelope.payload.get()).map_err(|e| BundleError::Corrupt(e.to_string()))
}

pub fn save_model(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<(), BundleError> {
    std::fs::write(path, to_document(bundle)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelBundle, BundleError> {
    from_document(&std::fs::read_to_string(path)?)
}

/// Deterministic digest of a sample set, recorded as training provenance.
pub fn corpus_digest(samples: &[LabeledSample]) -> String {
    let mut hasher = Sha256::new();
    for sample in samples {
        hasher.update(sample.text.as_bytes());
        hasher.update([b'\t', b'0' + sample.label, b'\n']);
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::Calibration;

    fn toy_bundle() -> ModelBundle {
        let docs = ["abcdef", "ghijkl", "mnopqr", "abcxyz"];
        let v = Vectorizer::fit(&docs, 3, 5, 500).unwrap();
        let x: Vec<_> = docs.iter().map(|d| v.transform(d)).collect();
        let mut model = crate::classifier::train(&x, &[1, 0, 0, 1], 1.0).unwrap();
        model.calibration = Some(Calibration { a: 1.3, b: -0.2 });
        ModelBundle::new(v, model)
    }

    #[test]
    fn roundtrip_is_exact() {
        let bundle = toy_bundle();
        let doc = to_document(&bundle).unwrap();
        let back = from_document(&doc).unwrap();
        assert_eq!(bundle.model, back.model);
        assert_eq!(bundle.thresholds, back.thresholds);
        for probe in ["abcdef", "ghijkl", "zzz", "abcxyz"] {
            let a = crate::classifier::predict_proba(&bundle.model, &bundle.vectorizer.transform(probe)).unwrap();
            let b = crate::classifier::predict_proba(&back.model, &back.vectorizer.transform(probe)).unwrap();
            assert_eq!(a.probability.to_bits(), b.probability.to_bits());
        }
    }

    #[test]
    fn truncated_document_fails_closed() {
        let doc = to_document(&toy_bundle()).unwrap();
        let truncated = &doc[..doc.len() / 2];
        assert!(matches!(from_document(truncated), Err(BundleError::Corrupt(_))));
    }

    #[test]
    fn tampered_payload_fails_digest() {
        let doc = to_document(&toy_bundle()).unwrap();
        let tampered = doc.replacen("\"bias\":", "\"bias_\":", 1);
        assert!(matches!(from_document(&tampered), Err(BundleError::Corrupt(_))));
    }

    #[test]
    fn future_version_fails_closed() {
        let doc = to_document(&toy_bundle()).unwrap();
        let future = doc.replacen(
            &format!("\"format_version\": {BUNDLE_FORMAT_VERSION}"),
            &format!("\"format_version\": {}", BUNDLE_FORMAT_VERSION + 1),
            1,
        );
        assert_ne!(doc, future, "replacement must have happened");
        assert!(matches!(
            from_document(&future),
            Err(BundleError::VersionMismatch { .. })
        ));
    }

    #[test]
    fn corpus_digest_is_order_sensitive_and_stable() {
        let a = vec![LabeledSample::new("a.com", 0, "t:1"), LabeledSample::new("b.com", 1, "t:2")];
        let d1 = corpus_digest(&a);
        let d2 = corpus_digest(&a);
        assert_eq!(d1, d2);
        let mut reversed = a.clone();
        reversed.reverse();
        assert_ne!(d1, corpus_digest(&reversed));
    }
}
