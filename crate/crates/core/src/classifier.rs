//! Layer 2: L2-regularized logistic regression with Platt calibration.
//!
//! The trainer minimizes `mean log-loss + ||w||^2 / (2*C*n)` (bias
//! unregularized) by deterministic full-batch gradient descent with
//! backtracking line search, stopping when the gradient infinity norm drops
//! below `grad_tol` or after `max_iters`. Calibration fits `sigma(A*s + B)`
//! against Platt-smoothed targets with the same optimizer. Grid search picks
//! the regularization strength by mean cross-validated F1, tie-broken by
//! balanced accuracy, then by smaller C.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, CorpusError};
use crate::eval::{self, MetricsReport};
use crate::features::{SparseVector, Vectorizer};

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("feature and label counts differ: {features} vs {labels}")]
    LengthMismatch { features: usize, labels: usize },
    #[error("training set needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("regularization strength C must be positive, got {0}")]
    InvalidC(f64),
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("cross-validation folds: {0}")]
    Folds(String),
}

impl From<CorpusError> for ClassifierError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::SingleClass(_) => ClassifierError::SingleClass,
            other => ClassifierError::Folds(other.to_string()),
        }
    }
}

/// Platt calibration pair: `p = sigma(a * score + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub a: f64,
    pub b: f64,
}

/// Trained logistic-regression parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Inverse regularization strength used in training.
    pub c: f64,
    pub calibration: Option<Calibration>,
}

/// Probability output along with whether calibration was applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibratedProb {
    pub probability: f64,
    pub calibrated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { max_iters: 1000, grad_tol: 1e-6 }
    }
}

/// Optimizer diagnostics: the recorded loss sequence is non-increasing.
#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub losses: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Cross-entropy of a logit `z` against a (possibly soft) target `t`.
fn logit_cross_entropy(z: f64, t: f64) -> f64 {
    softplus(z) - t * z
}

/// Compact row storage of the training subset, for cache-friendly sweeps.
struct Csr {
    indptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    dim: usize,
}

impl Csr {
    fn build(x: &[SparseVector], idx: &[usize]) -> Self {
        let dim = x.first().map(SparseVector::dim).unwrap_or(0);
        let nnz = idx.iter().map(|&i| x[i].nnz()).sum();
        let mut indptr = Vec::with_capacity(idx.len() + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        indptr.push(0);
        for &i in idx {
            for &(col, val) in x[i].entries() {
                cols.push(col);
                vals.push(val);
            }
            indptr.push(cols.len());
        }
        Self { indptr, cols, vals, dim }
    }

    fn rows(&self) -> usize {
        self.indptr.len() - 1
    }

    fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let range = self.indptr[i]..self.indptr[i + 1];
        (&self.cols[range.clone()], &self.vals[range])
    }
}

/// Regularized training objective and its analytic gradient at `(w, b)`.
///
/// Exposed so the gradient can be verified independently against finite
/// differences.
pub fn loss_and_gradient(
    x: &[SparseVector],
    y: &[u8],
    c: f64,
    w: &[f64],
    b: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let cn = c * n;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let s = xi.dot_dense(w) + b;
        let t = f64::from(yi);
        loss += logit_cross_entropy(s, t);
        let r = sigmoid(s) - t;
        grad_b += r;
        for &(col, val) in xi.entries() {
            grad_w[col as usize] += r * val;
        }
    }
    loss /= n;
    grad_b /= n;
    let mut w_sq = 0.0;
    for (gw, &wj) in grad_w.iter_mut().zip(w) {
        *gw = *gw / n + wj / cn;
        w_sq += wj * wj;
    }
    (loss + w_sq / (2.0 * cn), grad_w, grad_b)
}

/// Trains on the full sample set with default options.
pub fn train(x: &[SparseVector], y: &[u8], c: f64) -> Result<ModelParams, ClassifierError> {
    let idx: Vec<usize> = (0..x.len()).collect();
    train_on(x, y, &idx, c, &TrainOptions::default()).map(|(m, _)| m)
}

/// Trains with explicit options, returning optimizer diagnostics.
pub fn train_with(
    x: &[SparseVector],
    y: &[u8],
    c: f64,
    options: &TrainOptions,
) -> Result<(ModelParams, TrainTrace), ClassifierError> {
    let idx: Vec<usize> = (0..x.len()).collect();
    train_on(x, y, &idx, c, options)
}

/// Trains on the subset of rows selected by `idx`.
pub fn train_on(
    x: &[SparseVector],
    y: &[u8],
    idx: &[usize],
    c: f64,
    options: &TrainOptions,
) -> Result<(ModelParams, TrainTrace), ClassifierError> {
    if x.len() != y.len() {
        return Err(ClassifierError::LengthMismatch { features: x.len(), labels: y.len() });
    }
    if idx.len() < 2 {
        return Err(ClassifierError::TooFewSamples(idx.len()));
    }
    if !(c > 0.0) {
        return Err(ClassifierError::InvalidC(c));
    }
    let positives = idx.iter().filter(|&&i| y[i] == 1).count();
    if positives == 0 || positives == idx.len() {
        return Err(ClassifierError::SingleClass);
    }
    let dim = x[idx[0]].dim();
    for &i in idx {
        if x[i].dim() != dim {
            return Err(ClassifierError::DimensionMismatch { expected: dim, found: x[i].dim() });
        }
    }

    let csr = Csr::build(x, idx);
    let targets: Vec<f64> = idx.iter().map(|&i| f64::from(y[i])).collect();
    let (weights, bias, trace) = descend(&csr, &targets, c, options);
    Ok((ModelParams { weights, bias, c, calibration: None }, trace))
}

/// Gradient descent with backtracking line search over `(w, b)`.
///
/// Per-sample decision scores are carried between iterations and updated
/// incrementally, so each line-search candidate costs O(n) instead of
/// O(nnz).
fn descend(csr: &Csr, targets: &[f64], c: f64, options: &TrainOptions) -> (Vec<f64>, f64, TrainTrace) {
    const ARMIJO: f64 = 1e-4;
    const MIN_STEP: f64 = 1e-14;
    const MAX_STEP: f64 = 1e8;

    let n = csr.rows();
    let nf = n as f64;
    let cn = c * nf;
    let dim = csr.dim;

    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let mut scores = vec![0.0f64; n];
    let mut w_sq = 0.0f64;

    let data_loss = |scores: &[f64], shift: f64, gdot: &[f64]| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            total += logit_cross_entropy(scores[i] - shift * gdot[i], targets[i]);
        }
        total / nf
    };

    let zeros = vec![0.0f64; n];
    let mut loss = data_loss(&scores, 0.0, &zeros) + w_sq / (2.0 * cn);
    let mut losses = vec![loss];

    let mut grad_w = vec![0.0f64; dim];
    let mut gdot = vec![0.0f64; n];
    let mut last_step = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=options.max_iters {
        iterations = iter;

        // Gradient of the data term, scattered over the sparse rows.
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for i in 0..n {
            let r = sigmoid(scores[i]) - targets[i];
            grad_b += r;
            let (cols, vals) = csr.row(i);
            for (&col, &val) in cols.iter().zip(vals) {
                grad_w[col as usize] += r * val;
            }
        }
        grad_b /= nf;

        // Finalize with the regularization term; collect norms in one pass.
        let mut gg_w = 0.0;
        let mut wg = 0.0;
        let mut gmax = grad_b.abs();
        for (gw, &wj) in grad_w.iter_mut().zip(&w) {
            *gw = *gw / nf + wj / cn;
            gg_w += *gw * *gw;
            wg += wj * *gw;
            gmax = gmax.max(gw.abs());
        }
        if gmax < options.grad_tol {
            converged = true;
            break;
        }

        // Directional change of each score along -gradient.
        for i in 0..n {
            let (cols, vals) = csr.row(i);
            let mut dot = grad_b;
            for (&col, &val) in cols.iter().zip(vals) {
                dot += grad_w[col as usize] * val;
            }
            gdot[i] = dot;
        }
        let gg_total = gg_w + grad_b * grad_b;

        // Backtracking: accept the first step with sufficient decrease.
        let mut step = (last_step * 2.0).min(MAX_STEP);
        let mut accepted = None;
        while step >= MIN_STEP {
            let cand_wsq = w_sq - 2.0 * step * wg + step * step * gg_w;
            let cand = data_loss(&scores, step, &gdot) + cand_wsq / (2.0 * cn);
            if cand <= loss - ARMIJO * step * gg_total {
                accepted = Some((step, cand, cand_wsq));
                break;
            }
            step *= 0.5;
        }
        let Some((step, cand, cand_wsq)) = accepted else {
            // No descent step exists at representable size; we are done.
            break;
        };

        for (wj, &gw) in w.iter_mut().zip(&grad_w) {
            *wj -= step * gw;
        }
        b -= step * grad_b;
        for i in 0..n {
            scores[i] -= step * gdot[i];
        }
        w_sq = cand_wsq.max(0.0);
        loss = cand;
        losses.push(loss);
        last_step = step;
    }

    (w, b, TrainTrace { losses, iterations, converged })
}

/// Raw decision score `w . x + b`.
pub fn predict_score(m: &ModelParams, x: &SparseVector) -> Result<f64, ClassifierError> {
    if x.dim() != m.weights.len() {
        return Err(ClassifierError::DimensionMismatch {
            expected: m.weights.len(),
            found: x.dim(),
        });
    }
    Ok(x.dot_dense(&m.weights) + m.bias)
}

/// Calibrated probability `sigma(A*(w.x+b) + B)`, or the raw sigmoid flagged
/// as uncalibrated when no calibration pair is present.
pub fn predict_proba(m: &ModelParams, x: &SparseVector) -> Result<CalibratedProb, ClassifierError> {
    let score = predict_score(m, x)?;
    Ok(match m.calibration {
        Some(cal) => CalibratedProb { probability: sigmoid(cal.a * score + cal.b), calibrated: true },
        None => CalibratedProb { probability: sigmoid(score), calibrated: false },
    })
}

/// Fits the Platt pair `(A, B)` minimizing cross-entropy of
/// `sigma(A*s + B)` against smoothed targets `(N+ + 1)/(N+ + 2)` and
/// `1/(N- + 2)`.
///
/// Scores must come from out-of-fold predictions, never from data the
/// underlying model saw in training.
pub fn fit_calibration(scores: &[f64], labels: &[u8]) -> Result<Calibration, ClassifierError> {
    fit_calibration_with(scores, labels, &TrainOptions::default())
}

pub fn fit_calibration_with(
    scores: &[f64],
    labels: &[u8],
    options: &TrainOptions,
) -> Result<Calibration, ClassifierError> {
    if scores.len() != labels.len() {
        return Err(ClassifierError::LengthMismatch { features: scores.len(), labels: labels.len() });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(ClassifierError::SingleClass);
    }

    let t_pos = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
    let t_neg = 1.0 / (n_neg as f64 + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&l| if l == 1 { t_pos } else { t_neg }).collect();

    const ARMIJO: f64 = 1e-4;
    const MIN_STEP: f64 = 1e-14;
    let n = scores.len() as f64;

    let mut a = 0.0f64;
    let mut b = ((n_neg as f64 + 1.0) / (n_pos as f64 + 1.0)).ln();

    let eval_loss = |a: f64, b: f64| -> f64 {
        scores
            .iter()
            .zip(&targets)
            .map(|(&s, &t)| logit_cross_entropy(a * s + b, t))
            .sum::<f64>()
            / n
    };

    let mut loss = eval_loss(a, b);
    let mut last_step = 1.0f64;
    for _ in 0..options.max_iters {
        let mut grad_a = 0.0;
        let mut grad_b = 0.0;
        for (&s, &t) in scores.iter().zip(&targets) {
            let r = sigmoid(a * s + b) - t;
            grad_a += r * s;
            grad_b += r;
        }
        grad_a /= n;
        grad_b /= n;
        if grad_a.abs().max(grad_b.abs()) < options.grad_tol {
            break;
        }
        let gg = grad_a * grad_a + grad_b * grad_b;
        let mut step = (last_step * 2.0).min(1e8);
        let mut accepted = None;
        while step >= MIN_STEP {
            let cand = eval_loss(a - step * grad_a, b - step * grad_b);
            if cand <= loss - ARMIJO * step * gg {
                accepted = Some((step, cand));
                break;
            }
            step *= 0.5;
        }
        let Some((step, cand)) = accepted else { break };
        a -= step * grad_a;
        b -= step * grad_b;
        loss = cand;
        last_step = step;
    }

    Ok(Calibration { a, b })
}

/// Hyperparameter grid for cross-validated model selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparamGrid {
    pub c_values: Vec<f64>,
    pub folds: usize,
}

impl Default for HyperparamGrid {
    fn default() -> Self {
        Self { c_values: vec![0.01, 0.1, 1.0, 10.0], folds: 10 }
    }
}

/// Per-C cross-validation results.
#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub c: f64,
    pub fold_metrics: Vec<MetricsReport>,
    pub mean_f1: f64,
    pub mean_balanced_accuracy: f64,
    /// Out-of-fold decision scores, aligned with the training samples.
    #[serde(skip)]
    pub oof_scores: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSearchReport {
    pub best_c: f64,
    pub rows: Vec<GridRow>,
}

impl GridSearchReport {
    pub fn best_row(&self) -> &GridRow {
        self.rows
            .iter()
            .find(|r| r.c == self.best_c)
            .expect("best_c always comes from rows")
    }
}

/// Runs stratified k-fold cross-validation for every C in the grid and
/// selects the best by mean F1, then mean balanced accuracy, then smaller C.
pub fn grid_search(
    x: &[SparseVector],
    y: &[u8],
    grid: &HyperparamGrid,
    seed: u64,
) -> Result<GridSearchReport, ClassifierError> {
    if grid.c_values.is_empty() {
        return Err(ClassifierError::EmptyGrid);
    }
    if x.len() != y.len() {
        return Err(ClassifierError::LengthMismatch { features: x.len(), labels: y.len() });
    }
    for &c in &grid.c_values {
        if !(c > 0.0) {
            return Err(ClassifierError::InvalidC(c));
        }
    }
    let folds = corpus::stratified_folds(y, grid.folds, seed)?;
    let options = TrainOptions::default();

    let mut rows = Vec::with_capacity(grid.c_values.len());
    for &c in &grid.c_values {
        let mut oof = vec![f64::NAN; x.len()];
        let mut fold_metrics = Vec::with_capacity(folds.len());
        for fold in &folds {
            let in_fold: Vec<bool> = {
                let mut mask = vec![false; x.len()];
                for &i in fold {
                    mask[i] = true;
                }
                mask
            };
            let train_idx: Vec<usize> = (0..x.len()).filter(|&i| !in_fold[i]).collect();
            let (model, _) = train_on(x, y, &train_idx, c, &options)?;

            let mut predicted = Vec::with_capacity(fold.len());
            let mut actual = Vec::with_capacity(fold.len());
            for &i in fold {
                let score = predict_score(&model, &x[i])?;
                oof[i] = score;
                predicted.push(u8::from(score >= 0.0));
                actual.push(y[i]);
            }
            let cm = eval::confusion(&predicted, &actual)
                .map_err(|e| ClassifierError::Folds(e.to_string()))?;
            let report = eval::metrics(&cm).map_err(|e| ClassifierError::Folds(e.to_string()))?;
            fold_metrics.push(report);
        }
        let mean = |f: fn(&MetricsReport) -> f64| {
            fold_metrics.iter().map(f).sum::<f64>() / fold_metrics.len() as f64
        };
        rows.push(GridRow {
            c,
            mean_f1: mean(|m| m.f1),
            mean_balanced_accuracy: mean(|m| m.balanced_accuracy),
            fold_metrics,
            oof_scores: oof,
        });
    }

    let mut best = &rows[0];
    for row in &rows[1..] {
        let better = row.mean_f1 > best.mean_f1
            || (row.mean_f1 == best.mean_f1
                && (row.mean_balanced_accuracy > best.mean_balanced_accuracy
                    || (row.mean_balanced_accuracy == best.mean_balanced_accuracy
                        && row.c < best.c)));
        if better {
            best = row;
        }
    }
    let best_c = best.c;
    Ok(GridSearchReport { best_c, rows })
}

/// Grid search, then Platt calibration on the best C's out-of-fold scores,
/// then a final refit on all training data carrying the calibration pair.
pub fn train_calibrated(
    x: &[SparseVector],
    y: &[u8],
    grid: &HyperparamGrid,
    seed: u64,
) -> Result<(ModelParams, GridSearchReport), ClassifierError> {
    let report = grid_search(x, y, grid, seed)?;
    let calibration = fit_calibration(&report.best_row().oof_scores, y)?;
    let mut model = train(x, y, report.best_c)?;
    model.calibration = Some(calibration);
    Ok((model, report))
}

/// Signed per-term contributions of a prediction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Explanation {
    /// Top positive contributions, descending.
    pub positive: Vec<(String, f64)>,
    /// Top negative contributions, ascending (most negative first).
    pub negative: Vec<(String, f64)>,
}

/// Decomposes a prediction into per-n-gram contributions
/// `weight(t) * transformed_value(t)`; the contributions plus the bias sum
/// to the raw decision score.
pub fn explain(m: &ModelParams, v: &Vectorizer, text: &str, k: usize) -> Explanation {
    debug_assert_eq!(v.vocabulary_size(), m.weights.len());
    let x = v.transform(text);
    let mut contributions: Vec<(u32, f64)> = x
        .entries()
        .iter()
        .map(|&(col, val)| (col, m.weights[col as usize] * val))
        .filter(|&(_, contribution)| contribution != 0.0)
        .collect();

    contributions.sort_by(|a, b| b.1.total_cmp(&a.1));
    let positive = contributions
        .iter()
        .take_while(|&&(_, contribution)| contribution > 0.0)
        .take(k)
        .map(|&(col, contribution)| (v.term(col).to_string(), contribution))
        .collect();
    let negative = contributions
        .iter()
        .rev()
        .take_while(|&&(_, contribution)| contribution < 0.0)
        .take(k)
        .map(|&(col, contribution)| (v.term(col).to_string(), contribution))
        .collect();
    Explanation { positive, negative }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(dim: usize, col: u32, value: f64) -> SparseVector {
        SparseVector::from_entries(dim, vec![(col, value)])
    }

    #[test]
    fn separable_points_get_correct_signs() {
        let x = vec![unit(1, 0, -1.0), unit(1, 0, 1.0)];
        let y = vec![0u8, 1u8];
        let m = train(&x, &y, 1000.0).unwrap();
        assert!(predict_score(&m, &x[0]).unwrap() < 0.0);
        assert!(predict_score(&m, &x[1]).unwrap() > 0.0);
    }

    #[test]
    fn zero_features_learn_prior_logit() {
        let x: Vec<SparseVector> = (0..8).map(|_| SparseVector::zero(3)).collect();
        let y = vec![1, 1, 1, 1, 1, 1, 0, 0]; // prior 0.75
        let m = train(&x, &y, 1.0).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0));
        let prior_logit = (0.75f64 / 0.25).ln();
        assert!((m.bias - prior_logit).abs() < 1e-4, "bias {} vs {}", m.bias, prior_logit);
    }

    #[test]
    fn initial_model_predicts_half() {
        let m = ModelParams { weights: vec![0.0; 4], bias: 0.0, c: 1.0, calibration: None };
        let x = unit(4, 2, 0.7);
        let p = predict_proba(&m, &x).unwrap();
        assert_eq!(p.probability, 0.5);
        assert!(!p.calibrated);
    }

    #[test]
    fn predict_score_cases() {
        let m = ModelParams { weights: vec![0.5, -2.0, 3.0], bias: 0.25, c: 1.0, calibration: None };
        assert_eq!(predict_score(&m, &SparseVector::zero(3)).unwrap(), 0.25);
        assert_eq!(predict_score(&m, &unit(3, 1, 1.0)).unwrap(), -2.0 + 0.25);
        // Mixed-sign sparse dot against a dense oracle.
        let x = SparseVector::from_entries(3, vec![(0, 0.5), (2, -1.5)]);
        let dense: f64 = [0.5 * 0.5, 0.0, 3.0 * -1.5].iter().sum::<f64>() + 0.25;
        assert!((predict_score(&m, &x).unwrap() - dense).abs() < 1e-15);
    }

    #[test]
    fn predict_dimension_mismatch() {
        let m = ModelParams { weights: vec![0.0; 3], bias: 0.0, c: 1.0, calibration: None };
        let err = predict_score(&m, &SparseVector::zero(5)).unwrap_err();
        assert_eq!(err, ClassifierError::DimensionMismatch { expected: 3, found: 5 });
    }

    #[test]
    fn train_rejects_single_class() {
        let x = vec![unit(1, 0, 1.0), unit(1, 0, 2.0)];
        assert_eq!(train(&x, &[1, 1], 1.0).unwrap_err(), ClassifierError::SingleClass);
    }

    #[test]
    fn loss_sequence_non_increasing() {
        let x: Vec<SparseVector> = (0..20)
            .map(|i| SparseVector::from_entries(2, vec![(0, (i as f64) / 10.0 - 1.0 + 0.01), (1, 1.0)]))
            .collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        let (_, trace) = train_with(&x, &y, 1.0, &TrainOptions::default()).unwrap();
        for pair in trace.losses.windows(2) {
            assert!(pair[1] <= pair[0], "loss increased: {} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn calibrated_probability_formula() {
        let mut m = ModelParams { weights: vec![1.0], bias: 0.0, c: 1.0, calibration: None };
        m.calibration = Some(Calibration { a: 1.0, b: 0.0 });
        // score 0 -> 0.5
        assert_eq!(predict_proba(&m, &SparseVector::zero(1)).unwrap().probability, 0.5);
        // score ln(3) -> 3/4
        let x = unit(1, 0, 3f64.ln());
        let p = predict_proba(&m, &x).unwrap();
        assert!((p.probability - 0.75).abs() < 1e-12);
        assert!(p.calibrated);
    }

    #[test]
    fn calibration_monotone_when_a_positive() {
        let m = ModelParams {
            weights: vec![1.0],
            bias: 0.0,
            c: 1.0,
            calibration: Some(Calibration { a: 0.7, b: -0.2 }),
        };
        let p1 = predict_proba(&m, &unit(1, 0, -1.0)).unwrap().probability;
        let p2 = predict_proba(&m, &unit(1, 0, 2.0)).unwrap().probability;
        assert!(p1 < p2);
    }

    fn synthetic_scores(n: usize, seed: u64) -> (Vec<f64>, Vec<u8>) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut scores = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let s: f64 = rng.gen_range(-4.0..4.0);
            let y = u8::from(rng.gen_bool(sigmoid(s)));
            scores.push(s);
            labels.push(y);
        }
        (scores, labels)
    }

    #[test]
    fn calibration_recovers_identity_on_true_logits() {
        let (scores, labels) = synthetic_scores(20_000, 9);
        let cal = fit_calibration(&scores, &labels).unwrap();
        assert!((cal.a - 1.0).abs() < 0.1, "a = {}", cal.a);
        assert!(cal.b.abs() < 0.1, "b = {}", cal.b);
    }

    #[test]
    fn calibration_flattens_uninformative_scores() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = 20_000;
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        // Labels independent of scores, prior 0.3.
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.3))).collect();
        let cal = fit_calibration(&scores, &labels).unwrap();
        assert!(cal.a.abs() < 0.05, "a = {}", cal.a);
        let p_mid = sigmoid(cal.b);
        assert!((p_mid - 0.3).abs() < 0.05, "p = {p_mid}");
    }

    #[test]
    fn calibration_symmetric_gives_zero_b() {
        let scores = vec![-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
        let labels = vec![0, 0, 0, 1, 1, 1];
        let cal = fit_calibration(&scores, &labels).unwrap();
        assert!(cal.b.abs() < 1e-3, "b = {}", cal.b);
    }

    #[test]
    fn grid_single_value_selected() {
        let x = vec![unit(1, 0, -1.0), unit(1, 0, 1.0), unit(1, 0, -0.5), unit(1, 0, 0.5)];
        let y = vec![0, 1, 0, 1];
        let grid = HyperparamGrid { c_values: vec![0.5], folds: 2 };
        let report = grid_search(&x, &y, &grid, 1).unwrap();
        assert_eq!(report.best_c, 0.5);
        assert_eq!(report.rows.len(), 1);
    }

    #[test]
    fn grid_tie_breaks_to_smaller_c() {
        // Perfectly separable data: every C achieves identical fold metrics.
        let x: Vec<SparseVector> =
            (0..20).map(|i| unit(1, 0, if i < 10 { -1.0 } else { 1.0 })).collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        let grid = HyperparamGrid { c_values: vec![10.0, 0.1], folds: 2 };
        let report = grid_search(&x, &y, &grid, 3).unwrap();
        let f1: Vec<f64> = report.rows.iter().map(|r| r.mean_f1).collect();
        assert_eq!(f1[0], f1[1]);
        assert_eq!(report.best_c, 0.1);
    }

    #[test]
    fn grid_best_is_argmax_of_table() {
        let (scores, labels) = synthetic_scores(300, 17);
        let x: Vec<SparseVector> = scores
            .iter()
            .map(|&s| if s == 0.0 { SparseVector::zero(1) } else { unit(1, 0, s) })
            .collect();
        let grid = HyperparamGrid { c_values: vec![0.01, 0.1, 1.0, 10.0], folds: 5 };
        let report = grid_search(&x, &labels, &grid, 11).unwrap();
        let max_f1 = report.rows.iter().map(|r| r.mean_f1).fold(f64::MIN, f64::max);
        assert_eq!(report.best_row().mean_f1, max_f1);
    }

    #[test]
    fn explanation_sums_to_score() {
        let docs = ["paypal.com/login", "example.org/page", "verify.bank.net"];
        let v = Vectorizer::fit(&docs, 3, 5, 1000).unwrap();
        let x: Vec<SparseVector> = docs.iter().map(|d| v.transform(d)).collect();
        let y = vec![1, 0, 1];
        let m = train(&x, &y, 1.0).unwrap();

        let text = "paypal.com/login";
        let explanation = explain(&m, &v, text, 1000);
        let total: f64 = explanation
            .positive
            .iter()
            .chain(&explanation.negative)
            .map(|(_, contribution)| contribution)
            .sum();
        let score = predict_score(&m, &v.transform(text)).unwrap();
        assert!((total + m.bias - score).abs() < 1e-9);
    }

    #[test]
    fn explanation_truncates_and_handles_oov() {
        let docs = ["abcdef", "ghijkl"];
        let v = Vectorizer::fit(&docs, 3, 3, 1000).unwrap();
        let x: Vec<SparseVector> = docs.iter().map(|d| v.transform(d)).collect();
        let m = train(&x, &[1, 0], 10.0).unwrap();
        let e = explain(&m, &v, "abcdef", 2);
        assert!(e.positive.len() <= 2 && e.negative.len() <= 2);
        let e = explain(&m, &v, "zzzzzz", 3);
        assert!(e.positive.is_empty() && e.negative.is_empty());
    }

    #[test]
    fn single_term_explanation_is_weight() {
        let docs = ["abc", "abd"];
        let v = Vectorizer::fit(&docs, 3, 3, 10).unwrap();
        let x: Vec<SparseVector> = docs.iter().map(|d| v.transform(d)).collect();
        let m = train(&x, &[1, 0], 100.0).unwrap();
        let e = explain(&m, &v, "abc", 5);
        // "abc" transforms to unit mass on its own column.
        assert_eq!(e.positive.len() + e.negative.len(), 1);
        let col = 0; // "abc" sorts before "abd"
        let expected = m.weights[col];
        let got = e.positive.first().or(e.negative.first()).unwrap().1;
        assert!((got - expected).abs() < 1e-12);
    }
}
