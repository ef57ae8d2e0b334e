//! Intelligence providers: the live HTTP client and the offline
//! fixture-backed mock. Both return raw response documents so the parsing
//! path is byte-identical.

use std::fmt;
use std::path::PathBuf;
use std::time::Duration;

use super::{IntelError, LookupKind};

pub const VIRUSTOTAL_BASE_URL: &str = "https://www.virustotal.com";
pub const DEFAULT_TIMEOUT_S: u64 = 10;

/// Source of raw intelligence responses, keyed by canonical identifier.
pub trait IntelProvider: Send + Sync {
    fn fetch_raw(&self, kind: LookupKind, id: &str) -> Result<String, IntelError>;
    /// Remote providers go through the client's rate limiter.
    fn is_remote(&self) -> bool {
        true
    }
    fn name(&self) -> &str;
}

/// API key wrapper that never exposes the secret through Debug/Display.
#[derive(Clone)]
pub struct ApiKey(String);

impl ApiKey {
    pub fn new(key: impl Into<String>) -> Self {
        Self(key.into())
    }

    fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiKey(***)")
    }
}

/// Live provider speaking the v3 REST endpoints:
/// `GET {base}/api/v3/urls/{id}` and `GET {base}/api/v3/files/{hash}` with
/// an `x-apikey` header.
#[derive(Debug)]
pub struct HttpProvider {
    base_url: String,
    api_key: ApiKey,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(base_url: &str, api_key: ApiKey, timeout_s: u64) -> Result<Self, IntelError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(timeout_s))
            .build()
            .map_err(|e| IntelError::Transport(e.to_string()))?;
        Ok(Self { base_url: base_url.trim_end_matches('/').to_string(), api_key, client })
    }

    pub fn virustotal(api_key: ApiKey) -> Result<Self, IntelError> {
        Self::new(VIRUSTOTAL_BASE_URL, api_key, DEFAULT_TIMEOUT_S)
    }
}

impl IntelProvider for HttpProvider {
    fn fetch_raw(&self, kind: LookupKind, id: &str) -> Result<String, IntelError> {
        let url = match kind {
            LookupKind::Url => format!("{}/api/v3/urls/{}", self.base_url, id),
            LookupKind::Hash => format!("{}/api/v3/files/{}", self.base_url, id),
        };
        let response = self
            .client
            .get(url)
            .header("x-apikey", self.api_key.expose())
            .send()
            .map_err(|e| IntelError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        match status {
            200 => response.text().map_err(|e| IntelError::Transport(e.to_string())),
            401 | 403 => Err(IntelError::Auth(status)),
            404 => Err(IntelError::NotFound),
            429 => Err(IntelError::RateLimited),
            other => Err(IntelError::Transport(format!("unexpected status {other}"))),
        }
    }

    fn name(&self) -> &str {
        "virustotal"
    }
}

/// Offline provider serving one response document per file, named
/// `<identifier>.json`. Unknown identifiers behave as not-found.
#[derive(Debug, Clone)]
pub struct MockProvider {
    dir: PathBuf,
}

impl MockProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn fixture_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }
}

impl IntelProvider for MockProvider {
    fn fetch_raw(&self, _kind: LookupKind, id: &str) -> Result<String, IntelError> {
        match std::fs::read_to_string(self.fixture_path(id)) {
            Ok(body) => Ok(body),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(IntelError::NotFound),
            Err(e) => Err(IntelError::Transport(e.to_string())),
        }
    }

    fn is_remote(&self) -> bool {
        false
    }

    fn name(&self) -> &str {
        "mock"
    }
}
