//! `securescan serve`: the HTTP scan API.
//!
//! Endpoints: `POST /scan/url {"url": ...}`, `POST /scan/hash
//! {"hash": ...}`, `GET /health`. Validation failures return 400, a missing
//! model 503; intelligence failures degrade to Suspicious verdicts inside
//! the pipeline and never surface as 5xx.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use clap::Args;
use serde::Deserialize;
use securescan_core::bundle::BUNDLE_FORMAT_VERSION;
use securescan_core::config::AppConfig;
use securescan_core::decision::DecisionLayer;
use securescan_core::pipeline::{ScanError, ScanInput, Scanner};

use crate::engine::{self, PolicyOverrides};
use crate::response;

#[derive(Args)]
pub struct ServeArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Bind address, e.g. 127.0.0.1:8080 (port 0 picks a free port).
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: String,
    /// Serve intelligence lookups from a fixture directory.
    #[arg(long)]
    offline_fixtures: Option<PathBuf>,
    #[command(flatten)]
    policy: PolicyOverrides,
}

pub struct ServeState {
    scanner: Option<Arc<Scanner>>,
    started: Instant,
    bundle_created_at: u64,
}

pub fn run(args: ServeArgs, config: &AppConfig) -> anyhow::Result<u8> {
    let bundle = engine::load_bundle(&args.bundle)?;
    let scanner =
        engine::build_scanner(&bundle, config, &args.policy, args.offline_fixtures.as_ref())?;
    let state = Arc::new(ServeState {
        scanner: Some(Arc::new(scanner)),
        started: Instant::now(),
        bundle_created_at: bundle.created_at_unix,
    });

    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&args.listen).await?;
        let addr = listener.local_addr()?;
        println!("listening on http://{addr}");
        axum::serve(listener, router(state)).await?;
        Ok(0)
    })
}

pub fn router(state: Arc<ServeState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/scan/url", post(scan_url))
        .route("/scan/hash", post(scan_hash))
        .with_state(state)
}

async fn health(State(state): State<Arc<ServeState>>) -> Response {
    Json(serde_json::json!({
        "status": "ok",
        "model_loaded": state.scanner.is_some(),
        "bundle_format_version": BUNDLE_FORMAT_VERSION,
        "bundle_created_at": state.bundle_created_at,
        "uptime_s": state.started.elapsed().as_secs(),
    }))
    .into_response()
}

#[derive(Deserialize)]
struct UrlBody {
    url: String,
}

#[derive(Deserialize)]
struct HashBody {
    hash: String,
}

async fn scan_url(State(state): State<Arc<ServeState>>, body: Bytes) -> Response {
    let Some(scanner) = state.scanner.clone() else {
        return service_unavailable();
    };
    let parsed: UrlBody = match serde_json::from_slice(&body) {
        Ok(parsed) => parsed,
        Err(error) => return bad_request(&format!("expected {{\"url\": ...}}: {error}")),
    };
    run_scan(scanner, move || ScanInput::url(&parsed.url)).await
}

async fn scan_hash(State(state): State<Arc<ServeState>>, body: Bytes) -> Response {
    let Some(scanner) = state.scanner.clone() else {
        return service_unavailable();
    };
    let parsed: HashBody = match serde_json::from_slice(&body) {
        Ok(parsed) => parsed,
        Err(error) => return bad_request(&format!("expected {{\"hash\": ...}}: {error}")),
    };
    run_scan(scanner, move || ScanInput::hash(&parsed.hash)).await
}

/// Runs validation and the scan off the async workers; intelligence
/// lookups may block on the wire.
async fn run_scan(
    scanner: Arc<Scanner>,
    make_input: impl FnOnce() -> Result<ScanInput, ScanError> + Send + 'static,
) -> Response {
    let outcome = tokio::task::spawn_blocking(move || {
        let started = Instant::now();
        let input = make_input().map_err(reject)?;
        let verdict = scanner.scan(&input).map_err(reject)?;
        let explanation = match (&input, verdict.layer) {
            (ScanInput::Url { normalized, .. }, DecisionLayer::Model | DecisionLayer::Intel) => {
                Some(scanner.explain_url(normalized, 5))
            }
            _ => None,
        };
        let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
        Ok::<_, Response>(response::build(verdict, explanation.as_ref(), elapsed_ms))
    })
    .await;

    match outcome {
        Ok(Ok(document)) => (StatusCode::OK, Json(document)).into_response(),
        Ok(Err(rejection)) => rejection,
        Err(join_error) => (
            StatusCode::INTERNAL_SERVER_ERROR,
            Json(serde_json::json!({ "error": join_error.to_string() })),
        )
            .into_response(),
    }
}

fn reject(error: ScanError) -> Response {
    match &error {
        ScanError::Corpus(_) | ScanError::Intel(_) => bad_request(&error.to_string()),
        ScanError::ModelMissing => service_unavailable(),
        _ => (
            StatusCode::INTERNAL_SERVER_ERROR,
            Json(serde_json::json!({ "error": error.to_string() })),
        )
            .into_response(),
    }
}

fn bad_request(message: &str) -> Response {
    (StatusCode::BAD_REQUEST, Json(serde_json::json!({ "error": message }))).into_response()
}

fn service_unavailable() -> Response {
    (
        StatusCode::SERVICE_UNAVAILABLE,
        Json(serde_json::json!({ "error": "model not loaded" })),
    )
        .into_response()
}
