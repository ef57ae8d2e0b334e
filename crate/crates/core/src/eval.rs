//! Classification metrics, ROC/AUC, cross-validation, and the three-way
//! baseline comparison (heuristic-only vs intel-only vs hybrid).
//!
//! The positive class is malicious (1). Degenerate denominators yield 0 and
//! set the `degenerate` flag instead of aborting, so fold aggregation never
//! fails. Four-way verdicts score against binary ground truth with the
//! frozen mapping {Malicious, Suspicious} -> 1, {Benign, SafeVerified} -> 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, CorpusError, LabeledSample};
use crate::decision::VerdictLabel;
use crate::features::SparseVector;
use crate::heuristics::{evaluate_rules, HeuristicDecision};
use crate::intel::LookupKind;
use crate::pipeline::{ScanError, ScanInput, Scanner};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {left} predictions vs {right} labels")]
    LengthMismatch { left: usize, right: usize },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("both classes are required")]
    SingleClass,
    #[error("trainer failed: {0}")]
    Trainer(String),
    #[error("folds: {0}")]
    Folds(String),
    #[error("an intelligence provider is required for this configuration")]
    IntelRequired,
    #[error("scan failed: {0}")]
    Scan(String),
}

impl From<CorpusError> for EvalError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::SingleClass(_) => EvalError::SingleClass,
            other => EvalError::Folds(other.to_string()),
        }
    }
}

/// Binary confusion counts; positive class = malicious.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_count: u64) -> Self {
        Self {
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fn_count,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// Counts TP/FP/TN/FN from paired binary labels.
pub fn confusion(predicted: &[u8], actual: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if predicted.len() != actual.len() {
        return Err(EvalError::LengthMismatch { left: predicted.len(), right: actual.len() });
    }
    let mut cm = ConfusionMatrix::new(0, 0, 0, 0);
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p != 0, a != 0) {
            (true, true) => cm.true_positives += 1,
            (true, false) => cm.false_positives += 1,
            (false, false) => cm.true_negatives += 1,
            (false, true) => cm.false_negatives += 1,
        }
    }
    Ok(cm)
}

/// Scalar metrics derived from a confusion matrix (plus AUC when scores are
/// available).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: f64,
    pub balanced_accuracy: f64,
    pub auc: Option<f64>,
    /// Set when any denominator was zero and the metric defaulted to 0.
    pub degenerate: bool,
}

/// Computes accuracy, precision, recall, F1, FPR, and balanced accuracy.
pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let mut degenerate = false;
    let mut ratio = |num: u64, den: u64| -> f64 {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = ratio(cm.true_positives + cm.true_negatives, total);
    let precision = ratio(cm.true_positives, cm.true_positives + cm.false_positives);
    let recall = ratio(cm.true_positives, cm.true_positives + cm.false_negatives);
    let fpr = ratio(cm.false_positives, cm.false_positives + cm.true_negatives);
    let tnr = ratio(cm.true_negatives, cm.true_negatives + cm.false_positives);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        degenerate = true;
        0.0
    };
    Ok(MetricsReport {
        accuracy,
        precision,
        recall,
        f1,
        fpr,
        balanced_accuracy: (recall + tnr) / 2.0,
        auc: None,
        degenerate,
    })
}

/// ROC-AUC as the Mann-Whitney statistic `P(s+ > s-) + 0.5 * P(tie)`,
/// computed exactly via average ranks.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    let positives = labels.iter().filter(|&&l| l != 0).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Average ranks over tie groups, accumulating positive ranks.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share the average.
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &order[i..=j] {
            if labels[k] != 0 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }

    let p = positives as f64;
    let n = negatives as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// One point of the ROC curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// ROC curve points `(fpr, tpr, threshold)` at every distinct score,
/// descending, starting from `(0, 0, +inf)`.
pub fn roc_points(scores: &[f64], labels: &[u8]) -> Result<Vec<RocPoint>, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    let positives = labels.iter().filter(|&&l| l != 0).count() as f64;
    let negatives = labels.len() as f64 - positives;
    if positives == 0.0 || negatives == 0.0 {
        return Err(EvalError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: f64::INFINITY }];
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] != 0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives,
            tpr: tp as f64 / positives,
            threshold,
        });
    }
    Ok(points)
}

/// Trapezoidal area under ROC points; equals [`roc_auc`] exactly.
pub fn roc_points_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

/// Mean negative log-likelihood of probabilities against binary labels,
/// with probabilities clamped away from 0 and 1.
pub fn log_loss(probabilities: &[f64], labels: &[u8]) -> f64 {
    let mut total = 0.0;
    for (&p, &y) in probabilities.iter().zip(labels) {
        let p = p.clamp(1e-15, 1.0 - 1e-15);
        total -= if y != 0 { p.ln() } else { (1.0 - p).ln() };
    }
    total / probabilities.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    MeanStd { mean, std: var.sqrt() }
}

/// Per-metric mean and sample standard deviation across folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvAggregate {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub fpr: MeanStd,
    pub balanced_accuracy: MeanStd,
    pub auc: MeanStd,
}

#[derive(Debug, Clone, Serialize)]
pub struct CvReport {
    pub folds: Vec<MetricsReport>,
    pub aggregate: CvAggregate,
}

/// Stratified k-fold cross-validation over a caller-supplied trainer.
///
/// `train` fits on the selected training row indices; `score` produces a
/// decision score for one sample (>= 0 predicts malicious). Each fold's
/// test partition is scored by a model that never saw it.
pub fn cross_validate<M, E: std::fmt::Display>(
    x: &[SparseVector],
    y: &[u8],
    k: usize,
    seed: u64,
    train: impl Fn(&[SparseVector], &[u8], &[usize]) -> Result<M, E>,
    score: impl Fn(&M, &SparseVector) -> f64,
) -> Result<CvReport, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch { left: x.len(), right: y.len() });
    }
    let folds = corpus::stratified_folds(y, k, seed)?;
    let mut reports = Vec::with_capacity(k);
    for fold in &folds {
        let mut mask = vec![false; x.len()];
        for &i in fold {
            mask[i] = true;
        }
        let train_idx: Vec<usize> = (0..x.len()).filter(|&i| !mask[i]).collect();
        let model = train(x, y, &train_idx).map_err(|e| EvalError::Trainer(e.to_string()))?;

        let mut predicted = Vec::with_capacity(fold.len());
        let mut actual = Vec::with_capacity(fold.len());
        let mut fold_scores = Vec::with_capacity(fold.len());
        for &i in fold {
            let s = score(&model, &x[i]);
            fold_scores.push(s);
            predicted.push(u8::from(s >= 0.0));
            actual.push(y[i]);
        }
        let mut report = metrics(&confusion(&predicted, &actual)?)?;
        report.auc = roc_auc(&fold_scores, &actual).ok();
        reports.push(report);
    }

    let collect = |f: fn(&MetricsReport) -> f64| -> Vec<f64> { reports.iter().map(f).collect() };
    let aggregate = CvAggregate {
        accuracy: mean_std(&collect(|m| m.accuracy)),
        precision: mean_std(&collect(|m| m.precision)),
        recall: mean_std(&collect(|m| m.recall)),
        f1: mean_std(&collect(|m| m.f1)),
        fpr: mean_std(&collect(|m| m.fpr)),
        balanced_accuracy: mean_std(&collect(|m| m.balanced_accuracy)),
        auc: mean_std(&collect(|m| m.auc.unwrap_or(0.0))),
    };
    Ok(CvReport { folds: reports, aggregate })
}

/// Frozen scoring map from four-way verdicts to binary predictions:
/// Suspicious counts as malicious (conservative).
pub fn verdict_binary(label: VerdictLabel) -> u8 {
    match label {
        VerdictLabel::Malicious | VerdictLabel::Suspicious => 1,
        VerdictLabel::Benign | VerdictLabel::SafeVerified => 0,
    }
}

/// Metrics for the three detection configurations on one sample set.
#[derive(Debug, Clone, Serialize)]
pub struct BaselineComparison {
    pub heuristic_only: MetricsReport,
    pub intel_only: MetricsReport,
    pub hybrid: MetricsReport,
}

/// Runs heuristic-only, intel-only, and the full hybrid pipeline on the same
/// samples. Heuristic Reject maps to malicious; intel-only flags inputs with
/// `malicious_engines >= K`; hybrid scores verdicts via [`verdict_binary`].
pub fn compare_baselines(
    scanner: &Scanner,
    samples: &[LabeledSample],
) -> Result<BaselineComparison, EvalError> {
    let intel = scanner.intel().ok_or(EvalError::IntelRequired)?;
    let k = scanner.consensus().engine_threshold;
    let actual: Vec<u8> = samples.iter().map(|s| s.label).collect();

    let mut heuristic_pred = Vec::with_capacity(samples.len());
    let mut intel_pred = Vec::with_capacity(samples.len());
    let mut hybrid_pred = Vec::with_capacity(samples.len());
    for sample in samples {
        let outcome = evaluate_rules(&sample.text, scanner.rules());
        heuristic_pred.push(u8::from(outcome.decision == HeuristicDecision::Reject));

        let flagged = match intel.lookup(LookupKind::Url, &sample.text) {
            Ok(report) => report.malicious_engines >= k,
            Err(_) => false,
        };
        intel_pred.push(u8::from(flagged));

        let input = ScanInput::url(&sample.text).map_err(|e: ScanError| EvalError::Scan(e.to_string()))?;
        let verdict = scanner.scan(&input).map_err(|e| EvalError::Scan(e.to_string()))?;
        hybrid_pred.push(verdict_binary(verdict.label));
    }

    Ok(BaselineComparison {
        heuristic_only: metrics(&confusion(&heuristic_pred, &actual)?)?,
        intel_only: metrics(&confusion(&intel_pred, &actual)?)?,
        hybrid: metrics(&confusion(&hybrid_pred, &actual)?)?,
    })
}
