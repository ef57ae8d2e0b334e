//! Corpus ingestion: URL normalization, labeled-sample loading with
//! deduplication, controlled augmentation, and stratified splits/folds.
//!
//! Corpus files are delimiter-separated text with two columns `url,label`,
//! an optional header, and labels given as `{0,1}` or
//! `{benign,malicious}` (case-insensitive).

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::urltext;

pub const BENIGN: u8 = 0;
pub const MALICIOUS: u8 = 1;

/// Tracking query parameters stripped during normalization. A trailing `*`
/// marks a prefix pattern.
pub const DEFAULT_TRACKING_PARAMS: &[&str] = &["utm_*", "gclid", "fbclid", "ref"];

/// Path suffixes used for augmentation when none are configured.
pub const DEFAULT_AUGMENT_SUFFIXES: &[&str] =
    &["/index.html", "/verify/login", "/account/update", "/secure"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("input is empty")]
    EmptyInput,
    #[error("cannot isolate a host component in `{0}`")]
    MalformedUrl(String),
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("corpus has no valid rows")]
    EmptyCorpus,
    #[error("corpus must contain both classes (class {0} is absent)")]
    SingleClass(u8),
    #[error("train_fraction must lie in (0, 1), got {0}")]
    InvalidTrainFraction(f64),
    #[error("fold count {folds} exceeds the smallest class count {smallest}")]
    TooManyFolds { folds: usize, smallest: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A normalized URL plus its recorded pre-normalization scheme flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedUrl {
    pub text: String,
    pub https_present: bool,
}

/// One labeled training/evaluation sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    /// Normalized URL text (lowercase, scheme stripped).
    pub text: String,
    /// 0 = benign, 1 = malicious.
    pub label: u8,
    /// Provenance: `<source>:<row>`, `synthetic:<n>`, or `augmented:<parent>`.
    pub origin: String,
}

impl LabeledSample {
    pub fn new(text: impl Into<String>, label: u8, origin: impl Into<String>) -> Self {
        debug_assert!(label == BENIGN || label == MALICIOUS);
        Self { text: text.into(), label, origin: origin.into() }
    }
}

/// Split configuration: train fraction, RNG seed, and CV fold count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub folds: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_fraction: 0.80, seed: 0, folds: 10 }
    }
}

/// Compiled tracking-parameter deny-list.
#[derive(Debug, Clone)]
pub struct TrackingDenyList {
    exact: Vec<String>,
    prefixes: Vec<String>,
}

impl TrackingDenyList {
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Self {
        let mut exact = Vec::new();
        let mut prefixes = Vec::new();
        for p in patterns {
            let p = p.as_ref();
            match p.strip_suffix('*') {
                Some(prefix) => prefixes.push(prefix.to_string()),
                None => exact.push(p.to_string()),
            }
        }
        Self { exact, prefixes }
    }

    fn denies(&self, key: &str) -> bool {
        self.exact.iter().any(|e| e == key) || self.prefixes.iter().any(|p| key.starts_with(p))
    }
}

impl Default for TrackingDenyList {
    fn default() -> Self {
        Self::new(DEFAULT_TRACKING_PARAMS)
    }
}

/// Normalizes a raw URL with the default tracking deny-list.
pub fn normalize_url(raw: &str) -> Result<NormalizedUrl, CorpusError> {
    normalize_url_with(raw, &TrackingDenyList::default())
}

/// Lowercases, strips an `http://`/`https://` scheme prefix (recording
/// whether https was present), and removes deny-listed tracking query
/// parameters. The trailing slash is preserved as-is.
pub fn normalize_url_with(raw: &str, deny: &TrackingDenyList) -> Result<NormalizedUrl, CorpusError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    let lower = trimmed.to_lowercase();
    let (https_present, rest) = if let Some(r) = lower.strip_prefix("https://") {
        (true, r)
    } else if let Some(r) = lower.strip_prefix("http://") {
        (false, r)
    } else {
        (false, lower.as_str())
    };

    let parts = urltext::split(rest).ok_or_else(|| CorpusError::MalformedUrl(raw.to_string()))?;

    let mut out = String::with_capacity(rest.len());
    out.push_str(parts.host);
    out.push_str(parts.path);
    if let Some(query) = parts.query {
        let kept: Vec<&str> = query
            .split('&')
            .filter(|pair| {
                let key = pair.split('=').next().unwrap_or(pair);
                !deny.denies(key)
            })
            .collect();
        if !kept.is_empty() {
            out.push('?');
            out.push_str(&kept.join("&"));
        }
    }
    if let Some(fragment) = parts.fragment {
        out.push('#');
        out.push_str(fragment);
    }

    Ok(NormalizedUrl { text: out, https_present })
}

/// A loaded corpus: deduplicated samples plus bookkeeping counters.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub samples: Vec<LabeledSample>,
    pub benign_count: usize,
    pub malicious_count: usize,
    /// Rows dropped because their normalized text was already present.
    pub duplicates_dropped: usize,
    /// Dropped duplicates whose label disagreed with the kept row.
    pub label_conflicts: usize,
}

/// Loads a `url,label` corpus file, normalizing and deduplicating rows
/// (first occurrence wins).
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path)?;
    let source = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    parse_corpus(&content, &source)
}

/// Parses corpus text. `source` is used for sample provenance tags.
pub fn parse_corpus(content: &str, source: &str) -> Result<Corpus, CorpusError> {
    let deny = TrackingDenyList::default();
    let mut samples: Vec<LabeledSample> = Vec::new();
    let mut seen: HashMap<String, u8> = HashMap::new();
    let mut duplicates = 0usize;
    let mut conflicts = 0usize;
    let mut first_data_row = true;

    for (i, line) in content.lines().enumerate() {
        let row = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (url_part, label_part) = line
            .rsplit_once(',')
            .ok_or_else(|| CorpusError::Parse { row, message: "expected `url,label`".into() })?;
        let label_text = label_part.trim();

        if first_data_row && url_part.trim().eq_ignore_ascii_case("url")
            && label_text.eq_ignore_ascii_case("label")
        {
            first_data_row = false;
            continue;
        }
        first_data_row = false;

        let label = parse_label(label_text)
            .ok_or_else(|| CorpusError::Parse { row, message: format!("bad label `{label_text}`") })?;
        let normalized = normalize_url_with(url_part.trim(), &deny)
            .map_err(|e| CorpusError::Parse { row, message: e.to_string() })?;

        match seen.get(&normalized.text) {
            Some(&kept_label) => {
                duplicates += 1;
                if kept_label != label {
                    conflicts += 1;
                }
            }
            None => {
                seen.insert(normalized.text.clone(), label);
                samples.push(LabeledSample::new(normalized.text, label, format!("{source}:{row}")));
            }
        }
    }

    if samples.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let malicious_count = samples.iter().filter(|s| s.label == MALICIOUS).count();
    Ok(Corpus {
        benign_count: samples.len() - malicious_count,
        malicious_count,
        samples,
        duplicates_dropped: duplicates,
        label_conflicts: conflicts,
    })
}

fn parse_label(text: &str) -> Option<u8> {
    match text.to_ascii_lowercase().as_str() {
        "0" | "benign" => Some(BENIGN),
        "1" | "malicious" => Some(MALICIOUS),
        _ => None,
    }
}

/// Loads augmentation suffixes from a plain-text file, one per line.
pub fn load_suffixes(path: impl AsRef<Path>) -> Result<Vec<String>, CorpusError> {
    let content = std::fs::read_to_string(path)?;
    Ok(content.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

/// Emits `ceil(rate * n)` augmented copies with a path suffix appended,
/// keeping every original. Deterministic for a given seed; labels are
/// copied unchanged.
pub fn augment(
    samples: &[LabeledSample],
    suffixes: &[String],
    rate: f64,
    seed: u64,
) -> Vec<LabeledSample> {
    assert!(!suffixes.is_empty(), "augmentation needs at least one suffix");
    let rate = rate.max(0.0);
    let mut out = samples.to_vec();
    if samples.is_empty() || rate == 0.0 {
        return out;
    }
    let count = (rate * samples.len() as f64).ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.reserve(count);
    for _ in 0..count {
        let parent = &samples[rng.gen_range(0..samples.len())];
        let suffix = &suffixes[rng.gen_range(0..suffixes.len())];
        out.push(LabeledSample::new(
            append_suffix(&parent.text, suffix),
            parent.label,
            format!("augmented:{}", parent.origin),
        ));
    }
    out
}

fn append_suffix(text: &str, suffix: &str) -> String {
    match (text.ends_with('/'), suffix.starts_with('/')) {
        (true, true) => format!("{text}{}", &suffix[1..]),
        (false, false) => format!("{text}/{suffix}"),
        _ => format!("{text}{suffix}"),
    }
}

/// Stratified train/test split: per class, `round((1 - train_fraction) * n)`
/// samples go to the test set. Deterministic given the seed.
pub fn stratified_split(
    samples: &[LabeledSample],
    spec: &SplitSpec,
) -> Result<(Vec<LabeledSample>, Vec<LabeledSample>), CorpusError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(CorpusError::InvalidTrainFraction(spec.train_fraction));
    }
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    let by_class = class_indices(&labels)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut indices in by_class {
        indices.shuffle(&mut rng);
        let test_count = ((1.0 - spec.train_fraction) * indices.len() as f64).round() as usize;
        for (rank, index) in indices.into_iter().enumerate() {
            if rank < test_count {
                test.push(samples[index].clone());
            } else {
                train.push(samples[index].clone());
            }
        }
    }
    Ok((train, test))
}

/// Stratified k-fold partition over labels: every index lands in exactly one
/// fold and per-fold class counts differ from `count/k` by at most one.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, CorpusError> {
    assert!(k >= 2, "need at least two folds");
    let by_class = class_indices(labels)?;
    let smallest = by_class.iter().map(Vec::len).min().unwrap_or(0);
    if k > smallest {
        return Err(CorpusError::TooManyFolds { folds: k, smallest });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    for mut indices in by_class {
        indices.shuffle(&mut rng);
        for (rank, index) in indices.into_iter().enumerate() {
            folds[rank % k].push(index);
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

fn class_indices(labels: &[u8]) -> Result<[Vec<usize>; 2], CorpusError> {
    let mut benign = Vec::new();
    let mut malicious = Vec::new();
    for (i, &label) in labels.iter().enumerate() {
        if label == MALICIOUS {
            malicious.push(i);
        } else {
            benign.push(i);
        }
    }
    if benign.is_empty() {
        return Err(CorpusError::SingleClass(BENIGN));
    }
    if malicious.is_empty() {
        return Err(CorpusError::SingleClass(MALICIOUS));
    }
    Ok([benign, malicious])
}
