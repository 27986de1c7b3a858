//! Revision-history diff engine for news articles.
//!
//! Takes streams of published article versions and turns each adjacent
//! version pair into structured edit records: a sentence-level diff table
//! with three-part tags (Matched/Added/Removed, counterpart indices,
//! Changed/Unchanged), word-level atomic edits within matched-changed
//! sentences, and cached per-pair summary counts — all persisted to a
//! single-file SQLite database with canonical export queries on top.
//!
//! The pipeline stages map onto modules:
//!
//! * [`ingest`] — parse JSONL/CSV dumps, group versions, enumerate pairs;
//! * [`textproc`] — deterministic segmentation, tokenization, lemma lookup;
//! * [`matcher`] — the asymmetric similarity measure and directional
//!   sentence matching over a pair's Cartesian product;
//! * [`diffgen`] — tag assignment and word-level diffs / atomic edits;
//! * [`store`] — SQLite schema, writer, summaries, whole-file validation;
//! * [`exports`] — the four dataset read paths plus static HTML rendering;
//! * [`pipeline`] — parallel orchestration with ordered commits;
//! * [`synth`] — deterministic synthetic corpora for tests and demos.
//!
//! The `examples/` directory holds one runnable program per capability;
//! start with `full_pipeline`. The `newsedits` binary wraps the same
//! library functions behind subcommands.

pub mod cli;
pub mod diffgen;
pub mod error;
pub mod exports;
pub mod hash;
pub mod ingest;
pub mod matcher;
pub mod pipeline;
pub mod store;
pub mod synth;
pub mod textproc;

pub use error::{Error, Result};
