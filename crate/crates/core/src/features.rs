//! Text and binary feature extraction: TF-IDF over 3–7 character n-grams
//! capped at 50,000 features, and static numeric features for raw binaries.
//!
//! The TF-IDF variant is frozen for reproducibility: raw term counts,
//! smoothed idf `ln((1+N)/(1+df)) + 1`, and L2 normalization. The vocabulary
//! keeps the `max_features` highest-df terms (ties broken lexicographically)
//! and assigns column indices in lexicographic term order.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_NGRAM_MIN: usize = 3;
pub const DEFAULT_NGRAM_MAX: usize = 7;
pub const DEFAULT_MAX_FEATURES: usize = 50_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid n-gram range {0}..={1}")]
    InvalidNgramRange(usize, usize),
    #[error("max_features must be positive")]
    ZeroMaxFeatures,
}

/// Sparse vector with strictly increasing indices and non-zero values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn zero(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    /// Builds from `(index, value)` pairs. Panics on unsorted or duplicate
    /// indices, indices out of range, or zero values: those are programming
    /// errors, not data errors.
    pub fn from_entries(dim: usize, entries: Vec<(u32, f64)>) -> Self {
        for window in entries.windows(2) {
            assert!(window[0].0 < window[1].0, "indices must be strictly increasing");
        }
        for &(index, value) in &entries {
            assert!((index as usize) < dim, "index {index} out of range for dim {dim}");
            assert!(value != 0.0, "zero values must be omitted");
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    /// Dot product against a dense weight slice of length `dim`.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        debug_assert_eq!(dense.len(), self.dim);
        self.entries.iter().map(|&(i, v)| v * dense[i as usize]).sum()
    }

    fn l2_normalize(&mut self) {
        let norm = self.l2_norm();
        if norm > 0.0 {
            for entry in &mut self.entries {
                entry.1 /= norm;
            }
        }
    }
}

/// Enumerates every contiguous character n-gram of each length in
/// `n_min..=n_max`. Strings shorter than `n` contribute nothing for that `n`.
pub fn char_ngrams(text: &str, n_min: usize, n_max: usize) -> Vec<String> {
    let mut out = Vec::new();
    for_each_ngram(text, n_min, n_max, |gram| out.push(gram.to_string()));
    out
}

/// Visits each n-gram as a borrowed slice, avoiding per-gram allocation.
fn for_each_ngram<'a>(text: &'a str, n_min: usize, n_max: usize, mut visit: impl FnMut(&'a str)) {
    debug_assert!(1 <= n_min && n_min <= n_max);
    // Char boundary byte offsets, including the end of the string.
    let mut bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).collect();
    bounds.push(text.len());
    let chars = bounds.len() - 1;
    for n in n_min..=n_max {
        if chars < n {
            break;
        }
        for start in 0..=(chars - n) {
            visit(&text[bounds[start]..bounds[start + n]]);
        }
    }
}

/// Fitted TF-IDF vectorizer over character n-grams.
///
/// Immutable once fitted; `transform` is safe for concurrent use.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VectorizerData", into = "VectorizerData")]
pub struct Vectorizer {
    n_min: usize,
    n_max: usize,
    max_features: usize,
    /// Column index -> term, lexicographically ordered.
    terms: Vec<String>,
    idf: Vec<f64>,
    index: HashMap<String, u32>,
}

/// Serialized form: the term list and idf array; the lookup map is rebuilt.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct VectorizerData {
    n_min: usize,
    n_max: usize,
    max_features: usize,
    terms: Vec<String>,
    idf: Vec<f64>,
}

impl From<VectorizerData> for Vectorizer {
    fn from(data: VectorizerData) -> Self {
        let index = data
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self {
            n_min: data.n_min,
            n_max: data.n_max,
            max_features: data.max_features,
            terms: data.terms,
            idf: data.idf,
            index,
        }
    }
}

impl From<Vectorizer> for VectorizerData {
    fn from(v: Vectorizer) -> Self {
        Self {
            n_min: v.n_min,
            n_max: v.n_max,
            max_features: v.max_features,
            terms: v.terms,
            idf: v.idf,
        }
    }
}

impl Vectorizer {
    /// Fits vocabulary and idf on a corpus with the default 3–7 gram range
    /// and 50,000-feature cap.
    pub fn fit_default<S: AsRef<str>>(docs: &[S]) -> Result<Self, FeatureError> {
        Self::fit(docs, DEFAULT_NGRAM_MIN, DEFAULT_NGRAM_MAX, DEFAULT_MAX_FEATURES)
    }

    /// Fits vocabulary and idf on a corpus.
    ///
    /// Document frequency is counted over distinct documents, the vocabulary
    /// keeps the top `max_features` terms by df (ties lexicographic), and
    /// `idf(t) = ln((1+N)/(1+df(t))) + 1`.
    pub fn fit<S: AsRef<str>>(
        docs: &[S],
        n_min: usize,
        n_max: usize,
        max_features: usize,
    ) -> Result<Self, FeatureError> {
        if docs.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        if n_min == 0 || n_min > n_max {
            return Err(FeatureError::InvalidNgramRange(n_min, n_max));
        }
        if max_features == 0 {
            return Err(FeatureError::ZeroMaxFeatures);
        }

        let mut df: HashMap<String, u32> = HashMap::new();
        let mut seen: HashSet<&str> = HashSet::new();
        for doc in docs {
            seen.clear();
            for_each_ngram(doc.as_ref(), n_min, n_max, |gram| {
                if seen.insert(gram) {
                    match df.get_mut(gram) {
                        Some(count) => *count += 1,
                        None => {
                            df.insert(gram.to_string(), 1);
                        }
                    }
                }
            });
        }

        let mut ranked: Vec<(String, u32)> = df.into_iter().collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(max_features);
        ranked.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let n_docs = docs.len() as f64;
        let mut terms = Vec::with_capacity(ranked.len());
        let mut idf = Vec::with_capacity(ranked.len());
        let mut index = HashMap::with_capacity(ranked.len());
        for (col, (term, term_df)) in ranked.into_iter().enumerate() {
            idf.push(((1.0 + n_docs) / (1.0 + term_df as f64)).ln() + 1.0);
            index.insert(term.clone(), col as u32);
            terms.push(term);
        }

        Ok(Self { n_min, n_max, max_features, terms, idf, index })
    }

    /// Transforms text into an L2-normalized TF-IDF vector. Out-of-vocabulary
    /// n-grams are ignored; text with no in-vocabulary n-grams maps to the
    /// zero vector.
    pub fn transform(&self, text: &str) -> SparseVector {
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for_each_ngram(text, self.n_min, self.n_max, |gram| {
            if let Some(&col) = self.index.get(gram) {
                *counts.entry(col).or_insert(0) += 1;
            }
        });
        let mut entries: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(col, count)| (col, count as f64 * self.idf[col as usize]))
            .collect();
        entries.sort_unstable_by_key(|&(col, _)| col);
        let mut vector = SparseVector { dim: self.terms.len(), entries };
        vector.l2_normalize();
        vector
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    pub fn term(&self, col: u32) -> &str {
        &self.terms[col as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn ngram_range(&self) -> (usize, usize) {
        (self.n_min, self.n_max)
    }
}

/// Dense feature vector length produced by [`FileStaticFeatures::to_feature_vector`]:
/// log-size, entropy, printable density, then 256 normalized histogram bins.
pub const FILE_FEATURE_DIM: usize = 259;

/// Static numeric features extracted from a raw binary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileStaticFeatures {
    pub size_bytes: u64,
    /// Shannon entropy of the byte histogram, in [0, 8] bits.
    pub entropy_bits: f64,
    /// Fraction of bytes inside runs of >= 4 consecutive printable characters.
    pub printable_string_density: f64,
    /// 256 byte-value counts; sums to `size_bytes`.
    pub byte_histogram: Vec<u64>,
}

pub fn file_static_features(bytes: &[u8]) -> FileStaticFeatures {
    let mut histogram = vec![0u64; 256];
    for &b in bytes {
        histogram[b as usize] += 1;
    }

    let size = bytes.len() as f64;
    let mut entropy = 0.0;
    if !bytes.is_empty() {
        for &count in &histogram {
            if count > 0 {
                let p = count as f64 / size;
                entropy -= p * p.log2();
            }
        }
        // Guard against -0.0 from a single-symbol histogram.
        entropy = entropy.max(0.0);
    }

    let mut printable = 0usize;
    let mut run = 0usize;
    for &b in bytes {
        if (0x20..=0x7e).contains(&b) {
            run += 1;
        } else {
            if run >= 4 {
                printable += run;
            }
            run = 0;
        }
    }
    if run >= 4 {
        printable += run;
    }
    let density = if bytes.is_empty() { 0.0 } else { printable as f64 / size };

    FileStaticFeatures {
        size_bytes: bytes.len() as u64,
        entropy_bits: entropy,
        printable_string_density: density,
        byte_histogram: histogram,
    }
}

impl FileStaticFeatures {
    /// Dense numeric encoding fed to the file-model classifier instance:
    /// `[ln(1+size), entropy, density, hist_0/size, ..., hist_255/size]`.
    pub fn to_feature_vector(&self) -> SparseVector {
        let mut entries = Vec::new();
        let mut push = |col: u32, value: f64| {
            if value != 0.0 {
                entries.push((col, value));
            }
        };
        push(0, (1.0 + self.size_bytes as f64).ln());
        push(1, self.entropy_bits);
        push(2, self.printable_string_density);
        if self.size_bytes > 0 {
            let size = self.size_bytes as f64;
            for (i, &count) in self.byte_histogram.iter().enumerate() {
                push(3 + i as u32, count as f64 / size);
            }
        }
        SparseVector::from_entries(FILE_FEATURE_DIM, entries)
    }
}

/// Human-readable name of a file-feature column, for explanations.
pub fn file_feature_name(col: u32) -> String {
    match col {
        0 => "log_size".to_string(),
        1 => "entropy".to_string(),
        2 => "printable_density".to_string(),
        b => format!("byte_{:02x}", b - 3),
    }
}
