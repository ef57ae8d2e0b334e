//! The structured scan document returned by both the CLI and the HTTP
//! service.

use serde::Serialize;
use securescan_core::classifier::Explanation;
use securescan_core::decision::{DecisionLayer, IntelSummary, Verdict, VerdictLabel};

#[derive(Debug, Serialize)]
pub struct ScanResponse {
    pub verdict: VerdictLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    pub layer: DecisionLayer,
    pub reasons: Vec<String>,
    pub explanation: ExplanationDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intel: Option<IntelSummary>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Default, Serialize)]
pub struct ExplanationDoc {
    pub top_positive: Vec<TermContribution>,
    pub top_negative: Vec<TermContribution>,
}

#[derive(Debug, Serialize)]
pub struct TermContribution {
    pub term: String,
    pub contribution: f64,
}

impl From<&Explanation> for ExplanationDoc {
    fn from(explanation: &Explanation) -> Self {
        let convert = |items: &[(String, f64)]| {
            items
                .iter()
                .map(|(term, contribution)| TermContribution {
                    term: term.clone(),
                    contribution: *contribution,
                })
                .collect()
        };
        Self {
            top_positive: convert(&explanation.positive),
            top_negative: convert(&explanation.negative),
        }
    }
}

/// Assembles the wire document from a verdict plus optional explanation.
pub fn build(verdict: Verdict, explanation: Option<&Explanation>, elapsed_ms: f64) -> ScanResponse {
    ScanResponse {
        verdict: verdict.label,
        probability: verdict.probability,
        layer: verdict.layer,
        reasons: verdict.reasons,
        explanation: explanation.map(ExplanationDoc::from).unwrap_or_default(),
        intel: verdict.intel_summary,
        elapsed_ms,
    }
}
