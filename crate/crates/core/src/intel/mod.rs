//! Layer 3: threat-intelligence lookups with response caching, sliding-window
//! rate limiting, and single-flight refresh.
//!
//! The client is shareable across concurrent scanners; the cache and limiter
//! are internally synchronized. Only remote providers consume rate-limit
//! tokens.

mod provider;

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use provider::{ApiKey, HttpProvider, IntelProvider, MockProvider, VIRUSTOTAL_BASE_URL};

/// Environment variable holding the provider API key.
pub const ENV_API_KEY: &str = "SECURESCAN_VT_API_KEY";

pub const DEFAULT_RATE_LIMIT_PER_MIN: u32 = 4;
pub const DEFAULT_CACHE_TTL_S: u64 = 86_400;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntelError {
    #[error("input is empty")]
    EmptyInput,
    #[error("`{0}` is not an MD5/SHA-1/SHA-256 hex digest")]
    InvalidHash(String),
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("no analysis found")]
    NotFound,
    #[error("rate limited")]
    RateLimited,
    #[error("transport failure: {0}")]
    Transport(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LookupKind {
    Url,
    Hash,
}

/// Normalized third-party detection statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntelReport {
    pub malicious_engines: u32,
    pub suspicious_engines: u32,
    pub harmless_engines: u32,
    pub undetected_engines: u32,
    pub tags: Vec<String>,
    /// Epoch seconds of the provider's last analysis. Providers re-serve old
    /// analyses, so this may predate `fetched_at` by a lot.
    pub last_analysis_ts: u64,
    pub source: String,
    pub fetched_at: u64,
}

impl IntelReport {
    /// All-zero report tagged `not-found`, used when the provider has no
    /// analysis for the identifier.
    pub fn not_found(source: &str, fetched_at: u64) -> Self {
        Self {
            malicious_engines: 0,
            suspicious_engines: 0,
            harmless_engines: 0,
            undetected_engines: 0,
            tags: vec!["not-found".to_string()],
            last_analysis_ts: 0,
            source: source.to_string(),
            fetched_at,
        }
    }

    pub fn is_not_found(&self) -> bool {
        self.tags.iter().any(|t| t == "not-found")
    }
}

/// Unpadded base64url encoding of the exact submitted URL string (the
/// provider's v3 URL-identifier scheme).
pub fn url_identifier(url: &str) -> Result<String, IntelError> {
    if url.is_empty() {
        return Err(IntelError::EmptyInput);
    }
    Ok(URL_SAFE_NO_PAD.encode(url.as_bytes()))
}

/// Inverse of [`url_identifier`].
pub fn decode_url_identifier(id: &str) -> Result<String, IntelError> {
    let bytes = URL_SAFE_NO_PAD
        .decode(id.as_bytes())
        .map_err(|e| IntelError::Transport(format!("bad identifier: {e}")))?;
    String::from_utf8(bytes).map_err(|e| IntelError::Transport(format!("bad identifier: {e}")))
}

/// Validates and lowercases an MD5/SHA-1/SHA-256 hex digest.
pub fn normalize_hash(value: &str) -> Result<String, IntelError> {
    let lowered = value.trim().to_ascii_lowercase();
    let valid = matches!(lowered.len(), 32 | 40 | 64)
        && lowered.bytes().all(|b| b.is_ascii_hexdigit());
    if valid {
        Ok(lowered)
    } else {
        Err(IntelError::InvalidHash(value.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntelClientConfig {
    /// Remote calls allowed per sliding window.
    pub rate_limit: u32,
    /// Sliding window length in seconds.
    pub window_s: u64,
    /// Cache entry lifetime in seconds.
    pub cache_ttl_s: u64,
}

impl Default for IntelClientConfig {
    fn default() -> Self {
        Self {
            rate_limit: DEFAULT_RATE_LIMIT_PER_MIN,
            window_s: 60,
            cache_ttl_s: DEFAULT_CACHE_TTL_S,
        }
    }
}

struct CacheSlot {
    report: IntelReport,
    stored: Instant,
}

/// Caching, rate-limited lookup client over any [`IntelProvider`].
pub struct IntelClient {
    provider: Box<dyn IntelProvider>,
    config: IntelClientConfig,
    cache: Mutex<HashMap<String, CacheSlot>>,
    key_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    window: Mutex<VecDeque<Instant>>,
    provider_calls: AtomicU64,
}

impl IntelClient {
    pub fn new(provider: Box<dyn IntelProvider>, config: IntelClientConfig) -> Self {
        Self {
            provider,
            config,
            cache: Mutex::new(HashMap::new()),
            key_locks: Mutex::new(HashMap::new()),
            window: Mutex::new(VecDeque::new()),
            provider_calls: AtomicU64::new(0),
        }
    }

    pub fn with_mock_fixtures(dir: impl Into<std::path::PathBuf>) -> Self {
        Self::new(Box::new(MockProvider::new(dir)), IntelClientConfig::default())
    }

    /// Number of fetches that actually reached the provider (cache misses).
    pub fn provider_calls(&self) -> u64 {
        self.provider_calls.load(Ordering::Relaxed)
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    /// Looks up a URL or hash: cache first, then a rate-limit token (remote
    /// providers only), then the provider. A provider not-found becomes an
    /// all-zero report tagged `not-found`. Refreshes are single-flight per
    /// key.
    pub fn lookup(&self, kind: LookupKind, value: &str) -> Result<IntelReport, IntelError> {
        let key = match kind {
            LookupKind::Url => url_identifier(value)?,
            LookupKind::Hash => normalize_hash(value)?,
        };

        if let Some(report) = self.cache_fresh(&key) {
            return Ok(report);
        }

        let key_lock = {
            let mut locks = self.key_locks.lock().unwrap();
            Arc::clone(locks.entry(key.clone()).or_default())
        };
        let _refresh_guard = key_lock.lock().unwrap();

        // A concurrent caller may have refreshed while we waited.
        if let Some(report) = self.cache_fresh(&key) {
            return Ok(report);
        }

        if self.provider.is_remote() {
            self.acquire_rate_token()?;
        }
        self.provider_calls.fetch_add(1, Ordering::Relaxed);

        let fetched_at = epoch_seconds();
        let report = match self.provider.fetch_raw(kind, &key) {
            Ok(body) => parse_report(&body, self.provider.name(), fetched_at)?,
            Err(IntelError::NotFound) => IntelReport::not_found(self.provider.name(), fetched_at),
            Err(e) => return Err(e),
        };

        self.cache
            .lock()
            .unwrap()
            .insert(key, CacheSlot { report: report.clone(), stored: Instant::now() });
        Ok(report)
    }

    fn cache_fresh(&self, key: &str) -> Option<IntelReport> {
        let cache = self.cache.lock().unwrap();
        cache.get(key).and_then(|slot| {
            if slot.stored.elapsed().as_secs_f64() > self.config.cache_ttl_s as f64 {
                None
            } else {
                Some(slot.report.clone())
            }
        })
    }

    /// Non-blocking sliding-window limiter: at most `rate_limit` remote calls
    /// in any `window_s`-second window; excess callers fail immediately.
    fn acquire_rate_token(&self) -> Result<(), IntelError> {
        let mut window = self.window.lock().unwrap();
        let horizon = self.config.window_s as f64;
        while let Some(front) = window.front() {
            if front.elapsed().as_secs_f64() > horizon {
                window.pop_front();
            } else {
                break;
            }
        }
        if window.len() < self.config.rate_limit as usize {
            window.push_back(Instant::now());
            Ok(())
        } else {
            Err(IntelError::RateLimited)
        }
    }
}

fn epoch_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Parses a v3 analysis response. Missing stat fields default to zero;
/// structurally malformed documents are transport-class failures.
pub fn parse_report(body: &str, source: &str, fetched_at: u64) -> Result<IntelReport, IntelError> {
    let envelope: VtEnvelope = serde_json::from_str(body)
        .map_err(|e| IntelError::Transport(format!("malformed response: {e}")))?;
    let attributes = envelope.data.attributes;
    Ok(IntelReport {
        malicious_engines: attributes.last_analysis_stats.malicious,
        suspicious_engines: attributes.last_analysis_stats.suspicious,
        harmless_engines: attributes.last_analysis_stats.harmless,
        undetected_engines: attributes.last_analysis_stats.undetected,
        tags: attributes.tags,
        last_analysis_ts: attributes.last_analysis_date,
        source: source.to_string(),
        fetched_at,
    })
}

#[derive(Debug, Default, Deserialize)]
struct VtEnvelope {
    #[serde(default)]
    data: VtData,
}

#[derive(Debug, Default, Deserialize)]
struct VtData {
    #[serde(default)]
    attributes: VtAttributes,
}

#[derive(Debug, Default, Deserialize)]
struct VtAttributes {
    #[serde(default)]
    last_analysis_stats: VtStats,
    #[serde(default)]
    last_analysis_date: u64,
    #[serde(default)]
    tags: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
struct VtStats {
    #[serde(default)]
    malicious: u32,
    #[serde(default)]
    suspicious: u32,
    #[serde(default)]
    harmless: u32,
    #[serde(default)]
    undetected: u32,
}

/// Builds a fixture document in the provider's response shape.
pub fn fixture_document(
    malicious: u32,
    suspicious: u32,
    harmless: u32,
    undetected: u32,
    tags: &[&str],
    last_analysis_date: u64,
) -> String {
    serde_json::json!({
        "data": {
            "type": "analysis",
            "attributes": {
                "last_analysis_stats": {
                    "malicious": malicious,
                    "suspicious": suspicious,
                    "harmless": harmless,
                    "undetected": undetected,
                },
                "last_analysis_date": last_analysis_date,
                "tags": tags,
            }
        }
    })
    .to_string()
}
