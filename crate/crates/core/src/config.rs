//! Optional TOML configuration for deployment knobs: thresholds, consensus
//! parameters, the heuristic rule set, normalization deny-list, and
//! intelligence client settings. Unknown keys are ignored. CLI flags take
//! precedence over the config file, which takes precedence over bundle and
//! built-in defaults.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::{ConsensusPolicy, ThresholdPolicy};
use crate::heuristics::RuleSet;

/// Environment variable pointing at the config file.
pub const ENV_CONFIG: &str = "SECURESCAN_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub thresholds: Option<ThresholdPolicy>,
    pub consensus: Option<ConsensusPolicy>,
    /// Full rule-set override, including `reject_threshold`.
    pub heuristics: Option<RuleSet>,
    pub intel: Option<IntelSettings>,
    pub normalize: Option<NormalizeSettings>,
}

#[derive(Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct IntelSettings {
    pub base_url: Option<String>,
    pub api_key: Option<String>,
    pub rate_limit_per_min: Option<u32>,
    pub cache_ttl_s: Option<u64>,
    pub timeout_s: Option<u64>,
}

impl fmt::Debug for IntelSettings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntelSettings")
            .field("base_url", &self.base_url)
            .field("api_key", &self.api_key.as_ref().map(|_| "***"))
            .field("rate_limit_per_min", &self.rate_limit_per_min)
            .field("cache_ttl_s", &self.cache_ttl_s)
            .field("timeout_s", &self.timeout_s)
            .finish()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizeSettings {
    /// Tracking-parameter deny-list patterns; a trailing `*` is a prefix.
    pub tracking_params: Vec<String>,
}

impl AppConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Ok(toml::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Loads the file named by `SECURESCAN_CONFIG`, if set.
    pub fn from_env() -> Result<Option<Self>, ConfigError> {
        match std::env::var(ENV_CONFIG) {
            Ok(path) if !path.is_empty() => Self::load(path).map(Some),
            _ => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let toml = r#"
            [thresholds]
            t_benign = 0.4
            t_gray_upper = 0.5
            t_malicious = 0.7

            [consensus]
            engine_threshold = 5
            not_found_suspicious = true

            [intel]
            base_url = "http://127.0.0.1:9100"
            rate_limit_per_min = 2
            cache_ttl_s = 60
            timeout_s = 3

            [heuristics]
            reject_threshold = 2

            [[heuristics.rules]]
            id = "ip_host"
            weight = 3
            kind = "ip_host"
        "#;
        let config: AppConfig = toml::from_str(toml).unwrap();
        assert_eq!(config.thresholds.unwrap().t_malicious, 0.7);
        let consensus = config.consensus.unwrap();
        assert_eq!(consensus.engine_threshold, 5);
        assert!(consensus.not_found_suspicious);
        let intel = config.intel.unwrap();
        assert_eq!(intel.rate_limit_per_min, Some(2));
        let rules = config.heuristics.unwrap();
        assert_eq!(rules.reject_threshold, 2);
        assert_eq!(rules.rules.len(), 1);
        assert_eq!(rules.rules[0].weight, 3);
    }

    #[test]
    fn empty_and_unknown_keys_tolerated() {
        let config: AppConfig = toml::from_str("").unwrap();
        assert!(config.thresholds.is_none());
        let config: AppConfig = toml::from_str("[future_section]\nx = 1\n").unwrap();
        assert!(config.consensus.is_none());
    }

    #[test]
    fn partial_thresholds_fill_defaults() {
        let config: AppConfig = toml::from_str("[thresholds]\nt_malicious = 0.8\n").unwrap();
        let t = config.thresholds.unwrap();
        assert_eq!(t.t_malicious, 0.8);
        assert_eq!(t.t_benign, 0.45);
    }

    #[test]
    fn api_key_not_in_debug_output() {
        let config: AppConfig =
            toml::from_str("[intel]\napi_key = \"super-secret\"\n").unwrap();
        let debug = format!("{config:?}");
        assert!(!debug.contains("super-secret"));
    }
}
