//! End-to-end scan orchestration: normalize, heuristics, classify, map
//! thresholds, and reconcile gray-zone cases with intelligence.
//!
//! URL inputs run all three layers; a heuristic Reject short-circuits and is
//! never overridden. Hash inputs carry no lexical signal and go straight to
//! the intelligence layer. File inputs run static features through the
//! separate file-model instance and escalate gray-zone cases by SHA-256.

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classifier::{self, ClassifierError, ModelParams};
use crate::corpus::{self, CorpusError};
use crate::decision::{
    self, ConsensusPolicy, DecisionError, DecisionLayer, ThresholdOutcome, ThresholdPolicy,
    Verdict, VerdictLabel,
};
use crate::features::{self, SparseVector, Vectorizer};
use crate::heuristics::{evaluate_rules, HeuristicDecision, RuleSet};
use crate::intel::{IntelClient, IntelError, LookupKind};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("no model available for this input kind")]
    ModelMissing,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Intel(#[from] IntelError),
}

/// A normalized input submitted for triage.
#[derive(Debug, Clone, PartialEq)]
pub enum ScanInput {
    Url { raw: String, normalized: String, https_present: bool },
    Hash { value: String },
    File { bytes: Vec<u8> },
}

impl ScanInput {
    /// Normalizes a raw URL, recording whether https was present.
    pub fn url(raw: &str) -> Result<Self, ScanError> {
        let normalized = corpus::normalize_url(raw)?;
        Ok(Self::Url {
            raw: raw.trim().to_string(),
            normalized: normalized.text,
            https_present: normalized.https_present,
        })
    }

    /// Validates an MD5/SHA-1/SHA-256 hex digest.
    pub fn hash(value: &str) -> Result<Self, ScanError> {
        Ok(Self::Hash { value: crate::intel::normalize_hash(value)? })
    }

    pub fn file(bytes: Vec<u8>) -> Self {
        Self::File { bytes }
    }
}

/// Immutable scanning engine: one model bundle's parameters plus policies
/// and an optional intelligence client. Safe to share across threads.
pub struct Scanner {
    vectorizer: Vectorizer,
    model: ModelParams,
    file_model: Option<ModelParams>,
    rules: RuleSet,
    thresholds: ThresholdPolicy,
    consensus: ConsensusPolicy,
    intel: Option<IntelClient>,
    /// How many explanation terms become verdict reasons.
    reason_terms: usize,
}

impl Scanner {
    pub fn new(vectorizer: Vectorizer, model: ModelParams) -> Self {
        Self {
            vectorizer,
            model,
            file_model: None,
            rules: RuleSet::default(),
            thresholds: ThresholdPolicy::default(),
            consensus: ConsensusPolicy::default(),
            intel: None,
            reason_terms: 3,
        }
    }

    pub fn with_file_model(mut self, file_model: ModelParams) -> Self {
        self.file_model = Some(file_model);
        self
    }

    pub fn with_rules(mut self, rules: RuleSet) -> Self {
        self.rules = rules;
        self
    }

    pub fn with_thresholds(mut self, thresholds: ThresholdPolicy) -> Self {
        self.thresholds = thresholds;
        self
    }

    pub fn with_consensus(mut self, consensus: ConsensusPolicy) -> Self {
        self.consensus = consensus;
        self
    }

    pub fn with_intel(mut self, intel: IntelClient) -> Self {
        self.intel = Some(intel);
        self
    }

    pub fn vectorizer(&self) -> &Vectorizer {
        &self.vectorizer
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn file_model(&self) -> Option<&ModelParams> {
        self.file_model.as_ref()
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn thresholds(&self) -> &ThresholdPolicy {
        &self.thresholds
    }

    pub fn consensus(&self) -> &ConsensusPolicy {
        &self.consensus
    }

    pub fn intel(&self) -> Option<&IntelClient> {
        self.intel.as_ref()
    }

    /// Per-term contributions for a normalized URL, for response documents.
    pub fn explain_url(&self, normalized: &str, k: usize) -> classifier::Explanation {
        classifier::explain(&self.model, &self.vectorizer, normalized, k)
    }

    /// Runs the full triage sequence for one input.
    pub fn scan(&self, input: &ScanInput) -> Result<Verdict, ScanError> {
        match input {
            ScanInput::Url { raw, normalized, .. } => self.scan_url(raw, normalized),
            ScanInput::Hash { value } => Ok(self.intel_verdict(LookupKind::Hash, value)),
            ScanInput::File { bytes } => self.scan_file(bytes),
        }
    }

    fn scan_url(&self, raw: &str, normalized: &str) -> Result<Verdict, ScanError> {
        let outcome = evaluate_rules(normalized, &self.rules);
        if outcome.decision == HeuristicDecision::Reject {
            return Ok(Verdict {
                label: VerdictLabel::Malicious,
                probability: None,
                layer: DecisionLayer::Heuristic,
                reasons: outcome.triggered,
                intel_summary: None,
            });
        }

        let x = self.vectorizer.transform(normalized);
        let prob = classifier::predict_proba(&self.model, &x)?;
        let p = prob.probability;
        match decision::map_threshold(p, &self.thresholds)? {
            ThresholdOutcome::Benign => Ok(self.model_verdict(VerdictLabel::Benign, p, normalized)),
            ThresholdOutcome::Malicious => {
                Ok(self.model_verdict(VerdictLabel::Malicious, p, normalized))
            }
            ThresholdOutcome::GrayZone => {
                // The raw submitted URL is what the provider indexes on.
                let intel = self.lookup(LookupKind::Url, raw);
                Ok(decision::reconcile(p, intel, &self.consensus))
            }
        }
    }

    fn scan_file(&self, bytes: &[u8]) -> Result<Verdict, ScanError> {
        let file_model = self.file_model.as_ref().ok_or(ScanError::ModelMissing)?;
        let static_features = features::file_static_features(bytes);
        let x = static_features.to_feature_vector();
        let prob = classifier::predict_proba(file_model, &x)?;
        let p = prob.probability;
        match decision::map_threshold(p, &self.thresholds)? {
            ThresholdOutcome::Benign => Ok(self.file_verdict(VerdictLabel::Benign, p, file_model, &x)),
            ThresholdOutcome::Malicious => {
                Ok(self.file_verdict(VerdictLabel::Malicious, p, file_model, &x))
            }
            ThresholdOutcome::GrayZone => {
                let digest = hex_digest(bytes);
                let intel = self.lookup(LookupKind::Hash, &digest);
                Ok(decision::reconcile(p, intel, &self.consensus))
            }
        }
    }

    fn lookup(&self, kind: LookupKind, value: &str) -> Result<crate::intel::IntelReport, IntelError> {
        match &self.intel {
            Some(client) => client.lookup(kind, value),
            None => Err(IntelError::Transport("no intelligence provider configured".into())),
        }
    }

    /// Consensus verdict for hash inputs; unavailability degrades to
    /// Suspicious.
    fn intel_verdict(&self, kind: LookupKind, value: &str) -> Verdict {
        match self.lookup(kind, value) {
            Ok(report) => decision::consensus_verdict(&report, &self.consensus),
            Err(_) => Verdict {
                label: VerdictLabel::Suspicious,
                probability: None,
                layer: DecisionLayer::Model,
                reasons: vec!["intel-unavailable".to_string()],
                intel_summary: None,
            },
        }
    }

    fn model_verdict(&self, label: VerdictLabel, p: f64, normalized: &str) -> Verdict {
        let explanation = self.explain_url(normalized, self.reason_terms);
        let reasons = match label {
            VerdictLabel::Malicious => format_terms(&explanation.positive),
            _ => format_terms(&explanation.negative),
        };
        Verdict {
            label,
            probability: Some(p),
            layer: DecisionLayer::Model,
            reasons,
            intel_summary: None,
        }
    }

    fn file_verdict(
        &self,
        label: VerdictLabel,
        p: f64,
        file_model: &ModelParams,
        x: &SparseVector,
    ) -> Verdict {
        // Contributions over named static features instead of n-grams.
        let mut contributions: Vec<(u32, f64)> = x
            .entries()
            .iter()
            .map(|&(col, val)| (col, file_model.weights[col as usize] * val))
            .filter(|&(_, contribution)| contribution != 0.0)
            .collect();
        contributions.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
        let reasons = contributions
            .iter()
            .take(self.reason_terms)
            .map(|&(col, contribution)| {
                format!("{} ({:+.3})", features::file_feature_name(col), contribution)
            })
            .collect();
        Verdict {
            label,
            probability: Some(p),
            layer: DecisionLayer::Model,
            reasons,
            intel_summary: None,
        }
    }
}

fn format_terms(terms: &[(String, f64)]) -> Vec<String> {
    terms.iter().map(|(term, contribution)| format!("{term} ({contribution:+.3})")).collect()
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Vectorizer;

    /// A tiny but real model: malicious keywords vs clean words.
    fn toy_scanner() -> Scanner {
        let docs = [
            "paypal-login.example.zip/verify",
            "secure-update.bank-account.work/signin",
            "login.verify-account.review/update",
            "www.wikipedia.org/wiki/rust",
            "docs.example.org/guide/intro",
            "news.example.com/story/today",
        ];
        let labels = [1u8, 1, 1, 0, 0, 0];
        let v = Vectorizer::fit(&docs, 3, 5, 5000).unwrap();
        let x: Vec<_> = docs.iter().map(|d| v.transform(d)).collect();
        let mut model = crate::classifier::train(&x, &labels, 10.0).unwrap();
        model.calibration = Some(crate::classifier::Calibration { a: 1.0, b: 0.0 });
        Scanner::new(v, model)
    }

    #[test]
    fn heuristic_reject_short_circuits() {
        let scanner = toy_scanner();
        let input = ScanInput::url("192.168.0.1/login.php").unwrap();
        let verdict = scanner.scan(&input).unwrap();
        assert_eq!(verdict.label, VerdictLabel::Malicious);
        assert_eq!(verdict.layer, DecisionLayer::Heuristic);
        assert!(verdict.reasons.contains(&"ip_host".to_string()));
        assert_eq!(verdict.probability, None);
    }

    #[test]
    fn hash_without_provider_is_suspicious() {
        let scanner = toy_scanner();
        let input = ScanInput::hash(&"ab".repeat(16)).unwrap();
        let verdict = scanner.scan(&input).unwrap();
        assert_eq!(verdict.label, VerdictLabel::Suspicious);
        assert_eq!(verdict.reasons, vec!["intel-unavailable"]);
    }

    #[test]
    fn file_without_file_model_errors() {
        let scanner = toy_scanner();
        let err = scanner.scan(&ScanInput::file(vec![1, 2, 3])).unwrap_err();
        assert!(matches!(err, ScanError::ModelMissing));
    }

    #[test]
    fn url_input_normalizes() {
        let input = ScanInput::url("HTTPS://Example.COM/Login?utm_source=x").unwrap();
        match input {
            ScanInput::Url { raw, normalized, https_present } => {
                assert_eq!(raw, "HTTPS://Example.COM/Login?utm_source=x");
                assert_eq!(normalized, "example.com/login");
                assert!(https_present);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn invalid_hash_rejected() {
        assert!(ScanInput::hash("xyz").is_err());
        assert!(ScanInput::hash(&"a".repeat(64)).is_ok());
    }

    #[test]
    fn sha256_digest_shape() {
        let d = hex_digest(b"abc");
        assert_eq!(d.len(), 64);
        assert_eq!(d, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
