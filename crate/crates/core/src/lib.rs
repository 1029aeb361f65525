//! Treebank toolkit for Katharevousa-style historical Greek.
//!
//! The crate covers the full path from OCR-derived text to benchmark
//! reports:
//!
//! * [`conllu`] — data model, bit-exact CoNLL-U reading/writing, and
//!   structural validation at configurable strictness;
//! * [`reconstruct`] — OCR-aware text cleanup (dehyphenation, split-word
//!   joins, sentence-boundary punctuation);
//! * [`schema`] — annotation schema loading (tag sets, relation labels,
//!   sidecar fields);
//! * [`annotate`] — file-based batch ingestion with validation gating,
//!   resumable offset state, and a retry queue;
//! * [`snapshot`] — deterministic freezing of validated sentences into a
//!   manifest-anchored snapshot plus the seeded fixed train/test split;
//! * [`metrics`] — UPOS accuracy, weighted DEPREL F1, UAS, and LAS over
//!   aligned treebanks, with report diffing;
//! * [`baseline`] — a transparent hashed-feature logistic baseline:
//!   UPOS tagger, windowed arc scorer, and DEPREL labeler.
//!
//! Numeric code is generic over the scalar type via [`scalar`]: metrics can
//! run on `f64` or on exact rationals, model arithmetic on `f32`/`f64`. The
//! aliases below fix the scalar used by the shipped tools.

pub mod annotate;
pub mod baseline;
pub mod conllu;
pub mod metrics;
pub mod reconstruct;
pub mod schema;
pub mod scalar;
pub mod snapshot;

/// Version string recorded in snapshot manifests.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Evaluation report over `f64`, the scalar used by the CLI and JSON reports.
pub type EvalReport = metrics::EvalReport<f64>;
/// Report delta over `f64`.
pub type ReportDelta = metrics::ReportDelta<f64>;
/// Per-label precision/recall/F1 over `f64`.
pub type LabelScore = metrics::LabelScore<f64>;
/// Linear model over `f64`, the scalar used for training and inference.
pub type LinearModel = baseline::LinearModel<f64>;
/// Parser model over `f64`.
pub type ParserModel = baseline::ParserModel<f64>;
