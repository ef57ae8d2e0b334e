//! `securescan scan`: triage one URL, hash, or file and print the verdict
//! document. Exits 3 when the verdict is Malicious.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use securescan_core::config::AppConfig;
use securescan_core::decision::{DecisionLayer, VerdictLabel};
use securescan_core::pipeline::{ScanError, ScanInput};

use crate::engine::{self, PolicyOverrides};
use crate::response;

#[derive(Args)]
#[command(group = clap::ArgGroup::new("target").required(true).multiple(false))]
pub struct ScanArgs {
    /// Trained model bundle.
    #[arg(long)]
    bundle: PathBuf,
    /// URL to scan.
    #[arg(long, group = "target")]
    url: Option<String>,
    /// MD5/SHA-1/SHA-256 digest to look up.
    #[arg(long, group = "target")]
    hash: Option<String>,
    /// File to analyze via static features.
    #[arg(long, group = "target")]
    file: Option<PathBuf>,
    /// Serve intelligence lookups from a fixture directory instead of the
    /// live provider.
    #[arg(long)]
    offline_fixtures: Option<PathBuf>,
    /// Pretty-print the response document.
    #[arg(long)]
    pretty: bool,
    #[command(flatten)]
    policy: PolicyOverrides,
}

pub fn run(args: ScanArgs, config: &AppConfig) -> anyhow::Result<u8> {
    let bundle = engine::load_bundle(&args.bundle)?;
    let scanner =
        engine::build_scanner(&bundle, config, &args.policy, args.offline_fixtures.as_ref())?;

    let started = Instant::now();
    let input = if let Some(url) = &args.url {
        ScanInput::url(url)
    } else if let Some(hash) = &args.hash {
        ScanInput::hash(hash)
    } else {
        let path = args.file.as_ref().expect("clap enforces the target group");
        Ok(ScanInput::file(std::fs::read(path)?))
    };
    let input = match input {
        Ok(input) => input,
        Err(error @ (ScanError::Corpus(_) | ScanError::Intel(_))) => {
            eprintln!("error: invalid input: {error}");
            return Ok(2);
        }
        Err(error) => return Err(error.into()),
    };

    let verdict = scanner.scan(&input)?;
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;

    let explanation = match (&input, verdict.layer) {
        (ScanInput::Url { normalized, .. }, DecisionLayer::Model | DecisionLayer::Intel) => {
            Some(scanner.explain_url(normalized, 5))
        }
        _ => None,
    };
    let document = response::build(verdict, explanation.as_ref(), round_ms(elapsed_ms));
    let rendered = if args.pretty {
        serde_json::to_string_pretty(&document)?
    } else {
        serde_json::to_string(&document)?
    };
    println!("{rendered}");

    Ok(if document.verdict == VerdictLabel::Malicious { 3 } else { 0 })
}

fn round_ms(ms: f64) -> f64 {
    (ms * 1000.0).round() / 1000.0
}
