//! SecureScan core: a three-layer triage engine for URLs, file hashes, and
//! raw binaries.
//!
//! Layer 1 applies deterministic weighted heuristics ([`heuristics`]),
//! layer 2 a calibrated logistic-regression classifier over TF-IDF character
//! n-grams ([`features`], [`classifier`]), and layer 3 reconciles gray-zone
//! predictions against external threat intelligence ([`intel`], [`decision`]).
//! [`pipeline`] wires the layers together, [`corpus`] and [`eval`] provide the
//! training/evaluation harness, and [`bundle`] persists trained models.

pub mod bundle;
pub mod classifier;
pub mod config;
pub mod corpus;
pub mod decision;
pub mod eval;
pub mod features;
pub mod heuristics;
pub mod intel;
pub mod pipeline;
pub mod synthetic;

mod urltext;

pub use bundle::ModelBundle;
pub use classifier::ModelParams;
pub use corpus::LabeledSample;
pub use decision::{ThresholdPolicy, Verdict, VerdictLabel};
pub use features::{SparseVector, Vectorizer};
pub use heuristics::{HeuristicOutcome, RuleSet};
pub use intel::{IntelClient, IntelReport};
pub use pipeline::{ScanInput, Scanner};
