//! Layer 1: deterministic weighted rule scoring over normalized URLs.
//!
//! Rules accumulate a weighted score; inputs at or above the reject
//! threshold are rejected outright, everything else passes to the
//! classifier. Single signals such as a `.php` extension are common on
//! benign sites, which is why rejection requires an accumulated score
//! rather than any one rule firing.

use std::collections::HashSet;
use std::net::{Ipv4Addr, Ipv6Addr};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::urltext;

pub const DEFAULT_REJECT_THRESHOLD: u32 = 3;
pub const DEFAULT_BAD_TLDS: &[&str] = &["zip", "work", "review"];
pub const DEFAULT_PHISH_KEYWORDS: &[&str] =
    &["paypal", "login", "verify", "secure", "update", "account", "signin", "bank"];
pub const DEFAULT_BAD_EXTENSIONS: &[&str] = &[".php", ".asp", ".exe", ".sh"];
/// More than this many `%xx` escape sequences triggers the obfuscation rule.
pub const DEFAULT_MAX_PERCENT_ESCAPES: usize = 3;

/// Rule id reported when no host can be isolated from the input.
pub const MALFORMED_RULE_ID: &str = "malformed";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HeuristicError {
    #[error("duplicate rule id `{0}`")]
    DuplicateRuleId(String),
    #[error("rule `{0}` has zero weight")]
    ZeroWeight(String),
}

/// Predicate evaluated by a rule, with its tunable parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleCheck {
    /// Host is an IPv4 dotted quad or a bracketed IPv6 literal.
    IpHost,
    /// Hostname longer than `max_host_len` or with more than `max_labels`
    /// dot-separated labels.
    LongHost { max_host_len: usize, max_labels: usize },
    /// Top-level domain is in the set.
    BadTld { tlds: Vec<String> },
    /// Host or path contains any keyword as a substring.
    PhishKeyword { keywords: Vec<String> },
    /// Path ends with one of the extensions.
    BadExtension { extensions: Vec<String> },
    /// More than `max_percent_escapes` percent escapes, an `@`, or `//`
    /// inside the path.
    Obfuscation { max_percent_escapes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicRule {
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub weight: u32,
    #[serde(flatten)]
    pub check: RuleCheck,
}

impl HeuristicRule {
    pub fn new(id: &str, description: &str, weight: u32, check: RuleCheck) -> Self {
        Self { id: id.to_string(), description: description.to_string(), weight, check }
    }
}

/// Immutable rule set plus the reject threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<HeuristicRule>,
    pub reject_threshold: u32,
}

impl Default for RuleSet {
    fn default() -> Self {
        let strings = |items: &[&str]| items.iter().map(|s| s.to_string()).collect();
        Self {
            rules: vec![
                HeuristicRule::new(
                    "ip_host",
                    "host is an IP literal",
                    2,
                    RuleCheck::IpHost,
                ),
                HeuristicRule::new(
                    "long_host",
                    "hostname too long or too deeply nested",
                    1,
                    RuleCheck::LongHost { max_host_len: 75, max_labels: 4 },
                ),
                HeuristicRule::new(
                    "bad_tld",
                    "abuse-prone top-level domain",
                    1,
                    RuleCheck::BadTld { tlds: strings(DEFAULT_BAD_TLDS) },
                ),
                HeuristicRule::new(
                    "phish_keyword",
                    "brand or credential keyword in host/path",
                    1,
                    RuleCheck::PhishKeyword { keywords: strings(DEFAULT_PHISH_KEYWORDS) },
                ),
                HeuristicRule::new(
                    "bad_ext",
                    "executable or script path extension",
                    1,
                    RuleCheck::BadExtension { extensions: strings(DEFAULT_BAD_EXTENSIONS) },
                ),
                HeuristicRule::new(
                    "obfuscation",
                    "encoding or redirection obfuscation",
                    1,
                    RuleCheck::Obfuscation { max_percent_escapes: DEFAULT_MAX_PERCENT_ESCAPES },
                ),
            ],
            reject_threshold: DEFAULT_REJECT_THRESHOLD,
        }
    }
}

impl RuleSet {
    /// Checks id uniqueness and positive weights.
    pub fn validate(&self) -> Result<(), HeuristicError> {
        let mut ids = HashSet::new();
        for rule in &self.rules {
            if !ids.insert(rule.id.as_str()) {
                return Err(HeuristicError::DuplicateRuleId(rule.id.clone()));
            }
            if rule.weight == 0 {
                return Err(HeuristicError::ZeroWeight(rule.id.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicDecision {
    Pass,
    Reject,
}

/// Result of evaluating a rule set against one input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicOutcome {
    /// Triggered rule ids, sorted.
    pub triggered: Vec<String>,
    /// Sum of triggered rule weights.
    pub score: u32,
    pub decision: HeuristicDecision,
}

/// Evaluates every rule independently against a normalized URL.
///
/// Inputs whose host cannot be isolated are rejected with the pseudo-rule
/// id `malformed`, scored at the reject threshold so the
/// `score >= threshold <=> Reject` relation still holds.
pub fn evaluate_rules(input: &str, rules: &RuleSet) -> HeuristicOutcome {
    let parts = match urltext::split(input) {
        Some(parts) => parts,
        None => {
            return HeuristicOutcome {
                triggered: vec![MALFORMED_RULE_ID.to_string()],
                score: rules.reject_threshold,
                decision: HeuristicDecision::Reject,
            }
        }
    };
    let host = urltext::host_without_port(parts.host);

    let mut triggered: Vec<(&str, u32)> = Vec::new();
    for rule in &rules.rules {
        let hit = match &rule.check {
            RuleCheck::IpHost => is_ip_host(host),
            RuleCheck::LongHost { max_host_len, max_labels } => {
                host.len() > *max_host_len || host.split('.').count() > *max_labels
            }
            RuleCheck::BadTld { tlds } => {
                host.rsplit('.').next().map(|tld| tlds.iter().any(|t| t == tld)).unwrap_or(false)
            }
            RuleCheck::PhishKeyword { keywords } => {
                keywords.iter().any(|k| host.contains(k.as_str()) || parts.path.contains(k.as_str()))
            }
            RuleCheck::BadExtension { extensions } => {
                extensions.iter().any(|ext| parts.path.ends_with(ext.as_str()))
            }
            RuleCheck::Obfuscation { max_percent_escapes } => {
                count_percent_escapes(input) > *max_percent_escapes
                    || input.contains('@')
                    || parts.path.contains("//")
            }
        };
        if hit {
            triggered.push((&rule.id, rule.weight));
        }
    }

    triggered.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let score: u32 = triggered.iter().map(|(_, w)| w).sum();
    HeuristicOutcome {
        triggered: triggered.into_iter().map(|(id, _)| id.to_string()).collect(),
        score,
        decision: if score >= rules.reject_threshold {
            HeuristicDecision::Reject
        } else {
            HeuristicDecision::Pass
        },
    }
}

fn is_ip_host(host: &str) -> bool {
    if let Some(inner) = host.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
        return inner.parse::<Ipv6Addr>().is_ok();
    }
    host.parse::<Ipv4Addr>().is_ok()
}

fn count_percent_escapes(text: &str) -> usize {
    let bytes = text.as_bytes();
    let mut count = 0;
    for i in 0..bytes.len().saturating_sub(2) {
        if bytes[i] == b'%'
            && bytes[i + 1].is_ascii_hexdigit()
            && bytes[i + 2].is_ascii_hexdigit()
        {
            count += 1;
        }
    }
    count
}
