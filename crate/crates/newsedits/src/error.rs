//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the ingest, diff, storage and export stages.
///
/// Per-record problems during ingest (a malformed line, a missing field) are
/// *not* errors: they are logged, counted and skipped. `Error` is reserved
/// for conditions that abort the operation that raised them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("database error: {0}")]
    Sqlite(#[from] rusqlite::Error),

    /// Two records share (source, article_id, version_id) but disagree on text.
    #[error("conflicting records for ({outlet}, {article_id}, {version_id}): same key, different text")]
    DuplicateVersionKey {
        outlet: String,
        article_id: i64,
        version_id: u32,
    },

    /// A precondition on an operation's inputs was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Internal cross-structure inconsistency (match map out of range,
    /// word-op spans that do not partition their sequences, ...).
    #[error("consistency fault at {key}: {message}")]
    Consistency { key: String, message: String },

    /// Embedding file problems: bad magic, dimension mismatch, non-unit vector.
    #[error("embedding file error: {0}")]
    Embedding(String),

    /// A keyed lookup (version pair, article) found nothing.
    #[error("not found: {0}")]
    NotFound(String),

    #[error("{0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
