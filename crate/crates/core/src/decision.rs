//! Threshold policy and gray-zone reconciliation.
//!
//! Calibrated probabilities map to Benign (`p <= 0.45`), Malicious
//! (`p >= 0.60`), or the gray zone in between, which is escalated to the
//! intelligence layer. The published policy leaves (0.55, 0.60) unassigned;
//! this implementation routes it to the gray zone so uncertain inputs are
//! escalated rather than silently classified.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intel::{IntelError, IntelReport};

#[derive(Debug, Error, PartialEq)]
pub enum DecisionError {
    #[error("thresholds must satisfy 0 < benign <= gray_upper <= malicious < 1, got {0:?}")]
    InvalidPolicy(ThresholdPolicy),
}

/// Probability thresholds delimiting the decision regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdPolicy {
    pub t_benign: f64,
    pub t_gray_upper: f64,
    pub t_malicious: f64,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self { t_benign: 0.45, t_gray_upper: 0.55, t_malicious: 0.60 }
    }
}

impl ThresholdPolicy {
    pub fn validate(&self) -> Result<(), DecisionError> {
        let ordered = 0.0 < self.t_benign
            && self.t_benign <= self.t_gray_upper
            && self.t_gray_upper <= self.t_malicious
            && self.t_malicious < 1.0;
        if ordered {
            Ok(())
        } else {
            Err(DecisionError::InvalidPolicy(*self))
        }
    }
}

/// Region a calibrated probability falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdOutcome {
    Benign,
    Malicious,
    GrayZone,
}

/// Maps a probability to a decision region. Boundary semantics: `t_benign`
/// itself is Benign, `t_malicious` itself is Malicious, everything between
/// is the gray zone.
pub fn map_threshold(p: f64, policy: &ThresholdPolicy) -> Result<ThresholdOutcome, DecisionError> {
    policy.validate()?;
    debug_assert!((0.0..=1.0).contains(&p), "probability {p} out of range");
    Ok(if p <= policy.t_benign {
        ThresholdOutcome::Benign
    } else if p >= policy.t_malicious {
        ThresholdOutcome::Malicious
    } else {
        ThresholdOutcome::GrayZone
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictLabel {
    Benign,
    SafeVerified,
    Suspicious,
    Malicious,
}

/// Which layer produced the final label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionLayer {
    Heuristic,
    Model,
    Intel,
}

/// Digest of an [`IntelReport`] carried on intel-layer verdicts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntelSummary {
    pub malicious_engines: u32,
    pub suspicious_engines: u32,
    pub harmless_engines: u32,
    pub undetected_engines: u32,
    pub tags: Vec<String>,
    pub source: String,
}

impl From<&IntelReport> for IntelSummary {
    fn from(report: &IntelReport) -> Self {
        Self {
            malicious_engines: report.malicious_engines,
            suspicious_engines: report.suspicious_engines,
            harmless_engines: report.harmless_engines,
            undetected_engines: report.undetected_engines,
            tags: report.tags.clone(),
            source: report.source.clone(),
        }
    }
}

/// Final triage outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: VerdictLabel,
    /// Calibrated probability; absent for heuristic rejects and hash-only
    /// scans.
    pub probability: Option<f64>,
    pub layer: DecisionLayer,
    /// Triggered rule ids, top explanation terms, or consensus reasons.
    pub reasons: Vec<String>,
    pub intel_summary: Option<IntelSummary>,
}

/// Consensus parameters for the intelligence layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsensusPolicy {
    /// Engines that must flag the input before the verdict is confirmed
    /// malicious.
    pub engine_threshold: u32,
    /// When set, a provider not-found yields Suspicious instead of counting
    /// as zero detections.
    pub not_found_suspicious: bool,
}

impl Default for ConsensusPolicy {
    fn default() -> Self {
        Self { engine_threshold: 3, not_found_suspicious: false }
    }
}

/// Reconciles a gray-zone probability with an intelligence report.
///
/// `malicious_engines >= K` confirms Malicious, zero detections downgrades
/// to SafeVerified, anything in between stays Suspicious. When intelligence
/// is unavailable the model's uncertain assessment stands as Suspicious with
/// reason `intel-unavailable` (attributed to the model layer, since no
/// external evidence exists).
pub fn reconcile(
    probability: f64,
    intel: Result<IntelReport, IntelError>,
    consensus: &ConsensusPolicy,
) -> Verdict {
    match intel {
        Ok(report) => {
            let mut verdict = consensus_verdict(&report, consensus);
            verdict.probability = Some(probability);
            verdict
        }
        Err(_) => Verdict {
            label: VerdictLabel::Suspicious,
            probability: Some(probability),
            layer: DecisionLayer::Model,
            reasons: vec!["intel-unavailable".to_string()],
            intel_summary: None,
        },
    }
}

/// Applies the consensus rule to a report alone (no model probability), as
/// used for hash-kind scans.
pub fn consensus_verdict(report: &IntelReport, consensus: &ConsensusPolicy) -> Verdict {
    let summary = Some(IntelSummary::from(report));
    let (label, reason) = if consensus.not_found_suspicious && report.is_not_found() {
        (VerdictLabel::Suspicious, "not-found")
    } else if report.malicious_engines >= consensus.engine_threshold {
        (VerdictLabel::Malicious, "confirmed")
    } else if report.malicious_engines == 0 {
        (VerdictLabel::SafeVerified, "no-detections")
    } else {
        (VerdictLabel::Suspicious, "partial-detections")
    };
    Verdict {
        label,
        probability: None,
        layer: DecisionLayer::Intel,
        reasons: vec![reason.to_string()],
        intel_summary: summary,
    }
}
