//! Assembles a `Scanner` from a bundle, the config file, CLI flag
//! overrides, and the selected intelligence provider.
//!
//! Precedence (most specific wins): CLI flags > config file > bundle >
//! built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use securescan_core::bundle::{load_model, ModelBundle};
use securescan_core::config::AppConfig;
use securescan_core::intel::{
    ApiKey, HttpProvider, IntelClient, IntelClientConfig, MockProvider, ENV_API_KEY,
    VIRUSTOTAL_BASE_URL,
};
use securescan_core::pipeline::Scanner;

/// Threshold/consensus flags shared by scan, evaluate, and serve.
#[derive(Debug, Args, Clone, Default)]
pub struct PolicyOverrides {
    /// Probabilities at or below this are benign.
    #[arg(long)]
    pub t_benign: Option<f64>,
    /// Upper edge of the published gray band (documentation value).
    #[arg(long)]
    pub t_gray_upper: Option<f64>,
    /// Probabilities at or above this are malicious.
    #[arg(long)]
    pub t_malicious: Option<f64>,
    /// Engines required before intelligence confirms a malicious verdict.
    #[arg(long)]
    pub engine_threshold: Option<u32>,
}

pub fn load_bundle(path: &Path) -> anyhow::Result<ModelBundle> {
    load_model(path).with_context(|| format!("loading bundle {}", path.display()))
}

/// Builds the scanner with policy resolution and an optional provider.
pub fn build_scanner(
    bundle: &ModelBundle,
    config: &AppConfig,
    overrides: &PolicyOverrides,
    offline_fixtures: Option<&PathBuf>,
) -> anyhow::Result<Scanner> {
    let mut scanner = bundle.to_scanner();

    let mut thresholds = config.thresholds.unwrap_or(bundle.thresholds);
    if let Some(t) = overrides.t_benign {
        thresholds.t_benign = t;
    }
    if let Some(t) = overrides.t_gray_upper {
        thresholds.t_gray_upper = t;
    }
    if let Some(t) = overrides.t_malicious {
        thresholds.t_malicious = t;
    }
    thresholds.validate()?;
    scanner = scanner.with_thresholds(thresholds);

    let mut consensus = config.consensus.unwrap_or_default();
    if let Some(k) = overrides.engine_threshold {
        consensus.engine_threshold = k;
    }
    anyhow::ensure!(consensus.engine_threshold >= 1, "engine threshold must be at least 1");
    scanner = scanner.with_consensus(consensus);

    if let Some(rules) = &config.heuristics {
        rules.validate().map_err(|e| anyhow::anyhow!("heuristics config: {e}"))?;
        scanner = scanner.with_rules(rules.clone());
    }

    if let Some(client) = build_intel_client(config, offline_fixtures)? {
        scanner = scanner.with_intel(client);
    }
    Ok(scanner)
}

/// Fixture directory wins; otherwise a live client when an API key is
/// available from the environment or config; otherwise no provider.
pub fn build_intel_client(
    config: &AppConfig,
    offline_fixtures: Option<&PathBuf>,
) -> anyhow::Result<Option<IntelClient>> {
    let settings = config.intel.clone().unwrap_or_default();
    let mut client_config = IntelClientConfig::default();
    if let Some(limit) = settings.rate_limit_per_min {
        client_config.rate_limit = limit;
    }
    if let Some(ttl) = settings.cache_ttl_s {
        client_config.cache_ttl_s = ttl;
    }

    if let Some(dir) = offline_fixtures {
        return Ok(Some(IntelClient::new(Box::new(MockProvider::new(dir)), client_config)));
    }

    let api_key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty()).or(settings.api_key);
    let Some(api_key) = api_key else { return Ok(None) };
    let base_url = settings.base_url.as_deref().unwrap_or(VIRUSTOTAL_BASE_URL);
    let timeout = settings.timeout_s.unwrap_or(10);
    let provider = HttpProvider::new(base_url, ApiKey::new(api_key), timeout)
        .map_err(|e| anyhow::anyhow!("intel client: {e}"))?;
    Ok(Some(IntelClient::new(Box::new(provider), client_config)))
}
