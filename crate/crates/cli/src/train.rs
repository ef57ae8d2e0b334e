//! `securescan train`: corpus -> augmentation -> stratified split -> grid
//! search with 10-fold CV -> Platt calibration -> final refit -> bundle.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use securescan_core::bundle::{self, ModelBundle};
use securescan_core::classifier::{self, HyperparamGrid};
use securescan_core::config::AppConfig;
use securescan_core::corpus::{self, SplitSpec, DEFAULT_AUGMENT_SUFFIXES};
use securescan_core::eval;
use securescan_core::features::{SparseVector, Vectorizer, DEFAULT_MAX_FEATURES};

#[derive(Args)]
pub struct TrainArgs {
    /// Labeled corpus file (`url,label` rows).
    #[arg(long)]
    corpus: PathBuf,
    /// Output path for the model bundle.
    #[arg(long)]
    out: PathBuf,
    /// Regularization strengths searched by cross-validation.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1,10")]
    grid: Vec<f64>,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Augmented copies per sample (0 disables augmentation).
    #[arg(long, default_value_t = 0.0)]
    augment_rate: f64,
    /// Suffix list for augmentation, one per line.
    #[arg(long)]
    augment_suffixes: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// Vocabulary cap for the TF-IDF vectorizer.
    #[arg(long, default_value_t = DEFAULT_MAX_FEATURES)]
    max_features: usize,
}

pub fn run(args: TrainArgs, config: &AppConfig) -> anyhow::Result<u8> {
    let started = Instant::now();
    let corpus = corpus::load_corpus(&args.corpus)?;
    println!(
        "corpus: {} samples ({} benign / {} malicious), {} duplicates dropped ({} label conflicts)",
        corpus.samples.len(),
        corpus.benign_count,
        corpus.malicious_count,
        corpus.duplicates_dropped,
        corpus.label_conflicts
    );

    let mut samples = corpus.samples;
    if args.augment_rate > 0.0 {
        let suffixes: Vec<String> = match &args.augment_suffixes {
            Some(path) => corpus::load_suffixes(path)?,
            None => DEFAULT_AUGMENT_SUFFIXES.iter().map(|s| s.to_string()).collect(),
        };
        anyhow::ensure!(!suffixes.is_empty(), "augmentation suffix list is empty");
        samples = corpus::augment(&samples, &suffixes, args.augment_rate, args.seed);
        println!("augmented to {} samples (rate {})", samples.len(), args.augment_rate);
    }

    let split = SplitSpec { train_fraction: args.train_fraction, seed: args.seed, folds: args.folds };
    let (train, test) = corpus::stratified_split(&samples, &split)?;
    println!("split: {} train / {} held out", train.len(), test.len());

    let texts: Vec<&str> = train.iter().map(|s| s.text.as_str()).collect();
    let vectorizer = Vectorizer::fit(&texts, 3, 7, args.max_features)?;
    println!("vectorizer: {} n-gram features", vectorizer.vocabulary_size());

    let x: Vec<SparseVector> = train.iter().map(|s| vectorizer.transform(&s.text)).collect();
    let y: Vec<u8> = train.iter().map(|s| s.label).collect();
    let grid = HyperparamGrid { c_values: args.grid.clone(), folds: args.folds };
    let (model, report) = classifier::train_calibrated(&x, &y, &grid, args.seed)?;
    for row in &report.rows {
        println!(
            "  C={:<8} mean F1 {:.4}  mean balanced accuracy {:.4}",
            row.c, row.mean_f1, row.mean_balanced_accuracy
        );
    }
    println!("selected C = {}", report.best_c);

    // Held-out check with the calibrated model.
    let mut predicted = Vec::with_capacity(test.len());
    let mut actual = Vec::with_capacity(test.len());
    let mut probabilities = Vec::with_capacity(test.len());
    for sample in &test {
        let p = classifier::predict_proba(&model, &vectorizer.transform(&sample.text))?;
        probabilities.push(p.probability);
        predicted.push(u8::from(p.probability >= 0.5));
        actual.push(sample.label);
    }
    let mut held_out = eval::metrics(&eval::confusion(&predicted, &actual)?)?;
    held_out.auc = eval::roc_auc(&probabilities, &actual).ok();
    println!(
        "held out: accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}  fpr {:.4}  auc {}",
        held_out.accuracy,
        held_out.precision,
        held_out.recall,
        held_out.f1,
        held_out.fpr,
        held_out.auc.map(|a| format!("{a:.4}")).unwrap_or_else(|| "n/a".into())
    );

    let best = report.best_row();
    let mut bundle = ModelBundle::new(vectorizer, model);
    if let Some(thresholds) = config.thresholds {
        thresholds.validate()?;
        bundle.thresholds = thresholds;
    }
    bundle.metadata = bundle::TrainingMetadata {
        corpus_digest: bundle::corpus_digest(&samples),
        samples: samples.len() as u64,
        benign: samples.iter().filter(|s| s.label == 0).count() as u64,
        malicious: samples.iter().filter(|s| s.label == 1).count() as u64,
        best_c: report.best_c,
        cv_mean_f1: best.mean_f1,
        cv_mean_balanced_accuracy: best.mean_balanced_accuracy,
    };
    bundle::save_model(&bundle, &args.out)?;
    println!("bundle written to {} in {:.1}s", args.out.display(), started.elapsed().as_secs_f64());
    Ok(0)
}
