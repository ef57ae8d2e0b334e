//! `securescan evaluate`: score a bundle on a labeled corpus, optionally
//! comparing heuristic-only / intel-only / hybrid configurations.

use std::path::PathBuf;

use clap::Args;
use securescan_core::classifier;
use securescan_core::config::AppConfig;
use securescan_core::corpus;
use securescan_core::eval::{self, BaselineComparison, MetricsReport};

use crate::engine::{self, PolicyOverrides};

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Labeled corpus to evaluate against.
    #[arg(long)]
    corpus: PathBuf,
    /// Also run the heuristic-only and intel-only baselines.
    #[arg(long)]
    baselines: bool,
    /// Serve intelligence lookups from a fixture directory.
    #[arg(long)]
    offline_fixtures: Option<PathBuf>,
    /// Emit a machine-readable JSON report instead of tables.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    policy: PolicyOverrides,
}

pub fn run(args: EvaluateArgs, config: &AppConfig) -> anyhow::Result<u8> {
    let bundle = engine::load_bundle(&args.bundle)?;
    let scanner =
        engine::build_scanner(&bundle, config, &args.policy, args.offline_fixtures.as_ref())?;
    let corpus = corpus::load_corpus(&args.corpus)?;

    let mut predicted = Vec::with_capacity(corpus.samples.len());
    let mut actual = Vec::with_capacity(corpus.samples.len());
    let mut probabilities = Vec::with_capacity(corpus.samples.len());
    for sample in &corpus.samples {
        let x = scanner.vectorizer().transform(&sample.text);
        let p = classifier::predict_proba(scanner.model(), &x)?;
        probabilities.push(p.probability);
        predicted.push(u8::from(p.probability >= 0.5));
        actual.push(sample.label);
    }
    let mut model_metrics = eval::metrics(&eval::confusion(&predicted, &actual)?)?;
    model_metrics.auc = eval::roc_auc(&probabilities, &actual).ok();

    let baselines: Option<BaselineComparison> = if args.baselines {
        Some(eval::compare_baselines(&scanner, &corpus.samples)?)
    } else {
        None
    };

    if args.json {
        let report = serde_json::json!({
            "samples": corpus.samples.len(),
            "benign": corpus.benign_count,
            "malicious": corpus.malicious_count,
            "model": model_metrics,
            "baselines": baselines,
        });
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(0);
    }

    println!(
        "evaluated {} samples ({} benign / {} malicious)",
        corpus.samples.len(),
        corpus.benign_count,
        corpus.malicious_count
    );
    println!("\nmodel (calibrated probabilities at 0.5):");
    print_metrics_block(&model_metrics);

    if let Some(comparison) = baselines {
        println!("\n{:<22} {:>15} {:>15} {:>15}", "metric", "heuristic-only", "intel-only", "hybrid");
        let rows: [(&str, fn(&MetricsReport) -> f64); 5] = [
            ("accuracy", |m| m.accuracy),
            ("precision", |m| m.precision),
            ("recall", |m| m.recall),
            ("f1", |m| m.f1),
            ("false positive rate", |m| m.fpr),
        ];
        for (name, get) in rows {
            println!(
                "{:<22} {:>15.4} {:>15.4} {:>15.4}",
                name,
                get(&comparison.heuristic_only),
                get(&comparison.intel_only),
                get(&comparison.hybrid)
            );
        }
    }
    Ok(0)
}

fn print_metrics_block(m: &MetricsReport) {
    println!("  accuracy            {:.4}", m.accuracy);
    println!("  precision           {:.4}", m.precision);
    println!("  recall              {:.4}", m.recall);
    println!("  f1                  {:.4}", m.f1);
    println!("  false positive rate {:.4}", m.fpr);
    println!("  balanced accuracy   {:.4}", m.balanced_accuracy);
    if let Some(auc) = m.auc {
        println!("  auc                 {auc:.4}");
    }
}
