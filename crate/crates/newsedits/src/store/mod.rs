//! Embedded relational storage.
//!
//! One corpus is one SQLite file holding three primary data tables —
//! `articles`, `sentence_diffs`, `word_diffs` — two summary-statistic tables
//! — `sentence_diff_stats`, `word_diff_stats` — and a `run_meta` key/value
//! table recording the configuration that produced the diffs.

mod validate;

pub use validate::{validate_db, ValidationReport, Violation};

use std::path::Path;

use rusqlite::{params, Connection, OpenFlags};

use crate::diffgen::word::{AtomicEdit, RowRef};
use crate::diffgen::{Change, DiffRow, PairKey, Tag};
use crate::error::{Error, Result};
use crate::ingest::ArticleVersionRecord;

/// DDL for every table and index of a corpus database.
pub const SCHEMA_DDL: &str = "\
CREATE TABLE IF NOT EXISTS articles (
    SOURCE       TEXT    NOT NULL,
    A_ID         INTEGER NOT NULL,
    VERSION_ID   INTEGER NOT NULL,
    TITLE        TEXT    NOT NULL DEFAULT '',
    URL          TEXT    NOT NULL DEFAULT '',
    TEXT         TEXT    NOT NULL,
    CREATED      TEXT    NOT NULL,
    ARCHIVE_URL  TEXT    NOT NULL DEFAULT '',
    NUM_VERSIONS INTEGER NOT NULL,
    PRIMARY KEY (SOURCE, A_ID, VERSION_ID)
);

CREATE TABLE IF NOT EXISTS sentence_diffs (
    SOURCE      TEXT    NOT NULL,
    A_ID        INTEGER NOT NULL,
    V_OLD_ID    INTEGER NOT NULL,
    V_NEW_ID    INTEGER NOT NULL,
    SENTENCE_ID INTEGER NOT NULL,
    SENT_OLD    TEXT    NOT NULL DEFAULT '',
    TAG_OLD     TEXT    NOT NULL DEFAULT '',
    SENT_NEW    TEXT    NOT NULL DEFAULT '',
    TAG_NEW     TEXT    NOT NULL DEFAULT '',
    PRIMARY KEY (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, SENTENCE_ID)
);

CREATE TABLE IF NOT EXISTS word_diffs (
    SOURCE      TEXT    NOT NULL,
    A_ID        INTEGER NOT NULL,
    V_OLD_ID    INTEGER NOT NULL,
    V_NEW_ID    INTEGER NOT NULL,
    SENTENCE_ID INTEGER NOT NULL,
    EDIT_ID     INTEGER NOT NULL,
    DIRECTION   TEXT    NOT NULL,
    TOKENS      TEXT    NOT NULL DEFAULT '',
    ANCHOR      INTEGER NOT NULL DEFAULT 0,
    PRIMARY KEY (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, SENTENCE_ID, EDIT_ID)
);

CREATE TABLE IF NOT EXISTS sentence_diff_stats (
    SOURCE                  TEXT    NOT NULL,
    A_ID                    INTEGER NOT NULL,
    V_OLD_ID                INTEGER NOT NULL,
    V_NEW_ID                INTEGER NOT NULL,
    NUM_SENTENCES_ADDED     INTEGER NOT NULL,
    NUM_SENTENCES_REMOVED   INTEGER NOT NULL,
    NUM_SENTENCES_CHANGED   INTEGER NOT NULL,
    NUM_SENTENCES_UNCHANGED INTEGER NOT NULL,
    NUM_REFACTORED          INTEGER NOT NULL,
    PRIMARY KEY (SOURCE, A_ID, V_OLD_ID, V_NEW_ID)
);

CREATE TABLE IF NOT EXISTS word_diff_stats (
    SOURCE           TEXT    NOT NULL,
    A_ID             INTEGER NOT NULL,
    V_OLD_ID         INTEGER NOT NULL,
    V_NEW_ID         INTEGER NOT NULL,
    NUM_ATOMIC_EDITS INTEGER NOT NULL,
    NUM_INSERTIONS   INTEGER NOT NULL,
    NUM_DELETIONS    INTEGER NOT NULL,
    PRIMARY KEY (SOURCE, A_ID, V_OLD_ID, V_NEW_ID)
);

CREATE TABLE IF NOT EXISTS run_meta (
    KEY   TEXT NOT NULL PRIMARY KEY,
    VALUE TEXT NOT NULL
);

CREATE INDEX IF NOT EXISTS idx_articles_source ON articles (SOURCE);
CREATE INDEX IF NOT EXISTS idx_articles_a_id ON articles (A_ID);
CREATE INDEX IF NOT EXISTS idx_sdiffs_article ON sentence_diffs (SOURCE, A_ID);
CREATE INDEX IF NOT EXISTS idx_wdiffs_article ON word_diffs (SOURCE, A_ID);
";

/// Per version-pair cached counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryRow {
    pub key: PairKey,
    pub num_sentences_added: u32,
    pub num_sentences_removed: u32,
    pub num_sentences_changed: u32,
    pub num_sentences_unchanged: u32,
    pub num_refactored: u32,
    pub num_atomic_edits: u32,
    pub num_insertions: u32,
    pub num_deletions: u32,
}

/// One stored row of `word_diffs`: an atomic edit, or the zero-op marker a
/// matched-unchanged sentence keeps so every M row has a word-level entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordDiffRow {
    pub row_ref: RowRef,
    /// 1-based per-sentence edit counter; 0 marks the zero-op row.
    pub edit_id: u32,
    /// "insertion", "deletion", or "none" for the zero-op marker.
    pub direction: String,
    /// Space-joined token run (tokens never contain whitespace).
    pub tokens: String,
    pub anchor: u32,
}

impl WordDiffRow {
    pub fn from_edit(edit: &AtomicEdit, edit_id: u32) -> WordDiffRow {
        WordDiffRow {
            row_ref: edit.row_ref.clone(),
            edit_id,
            direction: edit.direction.as_str().to_string(),
            tokens: edit.tokens.join(" "),
            anchor: edit.anchor,
        }
    }

    pub fn marker(row_ref: RowRef) -> WordDiffRow {
        WordDiffRow {
            row_ref,
            edit_id: 0,
            direction: "none".into(),
            tokens: String::new(),
            anchor: 0,
        }
    }
}

/// Everything one version pair contributes to the database.
#[derive(Debug, Clone)]
pub struct PairDiff {
    pub rows: Vec<DiffRow>,
    pub word_rows: Vec<WordDiffRow>,
    pub summary: SummaryRow,
}

/// Derive the cached counts of one pair from its diff rows.
///
/// Counts are tag-derived: added and removed come from the A/R tags, changed
/// and unchanged from old-side M flags, and refactored is the old-side
/// matched-unchanged rows whose counterpart index differs from their own.
pub fn compute_summary(rows: &[DiffRow], edits: &[WordDiffRow]) -> Result<SummaryRow> {
    let key = match rows.first() {
        Some(r) => r.key.clone(),
        None => {
            return Err(Error::Domain(
                "compute_summary requires at least one row".into(),
            ))
        }
    };
    if rows.iter().any(|r| r.key != key) {
        return Err(Error::Domain(format!(
            "compute_summary got rows from more than one pair (first key {key})"
        )));
    }
    let mut s = SummaryRow {
        key,
        num_sentences_added: 0,
        num_sentences_removed: 0,
        num_sentences_changed: 0,
        num_sentences_unchanged: 0,
        num_refactored: 0,
        num_atomic_edits: 0,
        num_insertions: 0,
        num_deletions: 0,
    };
    for row in rows {
        if let Some(Tag::Added) = row.tag_new() {
            s.num_sentences_added += 1;
        }
        match row.tag_old() {
            Some(Tag::Removed) => s.num_sentences_removed += 1,
            Some(Tag::Matched { indices, change }) => match change {
                Change::Changed => s.num_sentences_changed += 1,
                Change::Unchanged => {
                    s.num_sentences_unchanged += 1;
                    if indices.as_slice() != [row.sentence_id] {
                        s.num_refactored += 1;
                    }
                }
            },
            _ => {}
        }
    }
    for e in edits {
        match e.direction.as_str() {
            "insertion" => {
                s.num_atomic_edits += 1;
                s.num_insertions += 1;
            }
            "deletion" => {
                s.num_atomic_edits += 1;
                s.num_deletions += 1;
            }
            _ => {}
        }
    }
    Ok(s)
}

/// Open (or create) a corpus database read-write.
pub struct CorpusDb {
    conn: Connection,
}

impl CorpusDb {
    pub fn open(path: &Path) -> Result<CorpusDb> {
        let conn = Connection::open(path)?;
        conn.execute_batch(SCHEMA_DDL)?;
        Ok(CorpusDb { conn })
    }

    pub fn open_readonly(path: &Path) -> Result<CorpusDb> {
        let conn = Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_ONLY)?;
        Ok(CorpusDb { conn })
    }

    pub fn conn(&self) -> &Connection {
        &self.conn
    }

    /// Insert article versions; a duplicate primary key is fatal.
    pub fn insert_articles(&mut self, records: &[ArticleVersionRecord]) -> Result<usize> {
        let tx = self.conn.transaction()?;
        {
            let mut stmt = tx.prepare(
                "INSERT INTO articles \
                 (SOURCE, A_ID, VERSION_ID, TITLE, URL, TEXT, CREATED, ARCHIVE_URL, NUM_VERSIONS) \
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)",
            )?;
            for r in records {
                stmt.execute(params![
                    r.source,
                    r.article_id,
                    r.version_id,
                    r.title,
                    r.url,
                    r.text,
                    r.created_iso(),
                    r.archive_url,
                    r.num_versions,
                ])?;
            }
        }
        tx.commit()?;
        Ok(records.len())
    }

    /// Remove all diff output (sentence/word diffs, stats, run metadata),
    /// keeping the articles table. Makes `diff` runs repeatable.
    pub fn clear_diffs(&mut self) -> Result<()> {
        self.conn.execute_batch(
            "DELETE FROM sentence_diffs;
             DELETE FROM word_diffs;
             DELETE FROM sentence_diff_stats;
             DELETE FROM word_diff_stats;
             DELETE FROM run_meta;",
        )?;
        Ok(())
    }

    /// Write the diffs of many version pairs.
    ///
    /// Pairs are committed in slices of `batch_pairs` per transaction; each
    /// pair lands atomically (all of its rows share one transaction).
    pub fn write_pairs(&mut self, pairs: &[PairDiff], batch_pairs: usize) -> Result<WriteReport> {
        let batch = batch_pairs.max(1);
        let mut report = WriteReport::default();
        for chunk in pairs.chunks(batch) {
            let tx = self.conn.transaction()?;
            for pair in chunk {
                write_one_pair(&tx, pair, &mut report)?;
            }
            tx.commit()?;
            report.transactions += 1;
        }
        Ok(report)
    }

    /// Record run configuration, replacing previous values.
    pub fn set_run_meta(&mut self, entries: &[(&str, String)]) -> Result<()> {
        let tx = self.conn.transaction()?;
        {
            let mut stmt =
                tx.prepare("INSERT OR REPLACE INTO run_meta (KEY, VALUE) VALUES (?1, ?2)")?;
            for (k, v) in entries {
                stmt.execute(params![k, v])?;
            }
        }
        tx.commit()?;
        Ok(())
    }

    /// All article versions, grouped and ordered by (source, a_id, version).
    pub fn read_articles(&self) -> Result<Vec<ArticleVersionRecord>> {
        let mut stmt = self.conn.prepare(
            "SELECT SOURCE, A_ID, VERSION_ID, TITLE, URL, TEXT, CREATED, ARCHIVE_URL, NUM_VERSIONS \
             FROM articles ORDER BY SOURCE, A_ID, VERSION_ID",
        )?;
        let rows = stmt.query_map([], |row| {
            Ok((
                row.get::<_, String>(0)?,
                row.get::<_, i64>(1)?,
                row.get::<_, u32>(2)?,
                row.get::<_, String>(3)?,
                row.get::<_, String>(4)?,
                row.get::<_, String>(5)?,
                row.get::<_, String>(6)?,
                row.get::<_, String>(7)?,
                row.get::<_, u32>(8)?,
            ))
        })?;
        let mut out = Vec::new();
        for row in rows {
            let (source, article_id, version_id, title, url, text, created, archive_url, num_versions) =
                row?;
            let created = crate::ingest::parse_timestamp(&created).map_err(|e| {
                Error::Consistency {
                    key: format!("({source}, {article_id}, {version_id})"),
                    message: format!("stored CREATED unparsable: {e}"),
                }
            })?;
            out.push(ArticleVersionRecord {
                source,
                article_id,
                version_id,
                title,
                url,
                archive_url,
                text,
                created,
                num_versions,
            });
        }
        Ok(out)
    }

    /// Stored diff rows of one pair, ordered by sentence id.
    pub fn read_pair_rows(&self, key: &PairKey) -> Result<Vec<StoredDiffRow>> {
        let mut stmt = self.conn.prepare(
            "SELECT SENTENCE_ID, SENT_OLD, TAG_OLD, SENT_NEW, TAG_NEW FROM sentence_diffs \
             WHERE SOURCE = ?1 AND A_ID = ?2 AND V_OLD_ID = ?3 AND V_NEW_ID = ?4 \
             ORDER BY SENTENCE_ID",
        )?;
        let rows = stmt.query_map(
            params![key.source, key.article_id, key.v_old_id, key.v_new_id],
            |row| {
                Ok(StoredDiffRow {
                    key: key.clone(),
                    sentence_id: row.get(0)?,
                    sent_old: row.get(1)?,
                    tag_old: row.get(2)?,
                    sent_new: row.get(3)?,
                    tag_new: row.get(4)?,
                })
            },
        )?;
        let out: std::result::Result<Vec<_>, _> = rows.collect();
        Ok(out?)
    }

    /// Stored word-diff rows of one pair, ordered by (sentence, edit).
    pub fn read_pair_word_rows(&self, key: &PairKey) -> Result<Vec<WordDiffRow>> {
        let mut stmt = self.conn.prepare(
            "SELECT SENTENCE_ID, EDIT_ID, DIRECTION, TOKENS, ANCHOR FROM word_diffs \
             WHERE SOURCE = ?1 AND A_ID = ?2 AND V_OLD_ID = ?3 AND V_NEW_ID = ?4 \
             ORDER BY SENTENCE_ID, EDIT_ID",
        )?;
        let rows = stmt.query_map(
            params![key.source, key.article_id, key.v_old_id, key.v_new_id],
            |row| {
                Ok(WordDiffRow {
                    row_ref: RowRef {
                        key: key.clone(),
                        sentence_id: row.get(0)?,
                    },
                    edit_id: row.get(1)?,
                    direction: row.get(2)?,
                    tokens: row.get(3)?,
                    anchor: row.get(4)?,
                })
            },
        )?;
        let out: std::result::Result<Vec<_>, _> = rows.collect();
        Ok(out?)
    }

    /// All pair keys present in sentence_diffs, in primary-key order.
    pub fn pair_keys(&self) -> Result<Vec<PairKey>> {
        let mut stmt = self.conn.prepare(
            "SELECT DISTINCT SOURCE, A_ID, V_OLD_ID, V_NEW_ID FROM sentence_diffs \
             ORDER BY SOURCE, A_ID, V_OLD_ID, V_NEW_ID",
        )?;
        let rows = stmt.query_map([], |row| {
            Ok(PairKey {
                source: row.get(0)?,
                article_id: row.get(1)?,
                v_old_id: row.get(2)?,
                v_new_id: row.get(3)?,
            })
        })?;
        let out: std::result::Result<Vec<_>, _> = rows.collect();
        Ok(out?)
    }

    /// Corpus-level totals in the shape of the published headline counts.
    pub fn corpus_stats(&self) -> Result<CorpusStats> {
        let conn = &self.conn;
        let one = |sql: &str| -> Result<u64> {
            Ok(conn.query_row(sql, [], |r| r.get::<_, i64>(0))? as u64)
        };
        Ok(CorpusStats {
            articles: one("SELECT COUNT(DISTINCT SOURCE || ':' || A_ID) FROM articles")?,
            versions: one("SELECT COUNT(*) FROM articles")?,
            version_pairs: one(
                "SELECT COUNT(*) FROM (SELECT DISTINCT SOURCE, A_ID, V_OLD_ID, V_NEW_ID \
                 FROM sentence_diffs)",
            )?,
            sentences_added: one("SELECT COUNT(*) FROM sentence_diffs WHERE TAG_NEW = 'A'")?,
            sentences_removed: one("SELECT COUNT(*) FROM sentence_diffs WHERE TAG_OLD = 'R'")?,
            sentences_changed: one(
                "SELECT COUNT(*) FROM sentence_diffs WHERE TAG_NEW LIKE 'M %' AND TAG_NEW LIKE '% C'",
            )?,
            sentences_unchanged: one(
                "SELECT COUNT(*) FROM sentence_diffs WHERE TAG_NEW LIKE 'M %' AND TAG_NEW LIKE '% U'",
            )?,
            refactorings: count_refactorings(conn)?,
            atomic_edits: one("SELECT COUNT(*) FROM word_diffs WHERE DIRECTION != 'none'")?,
        })
    }
}

/// New-side matched-unchanged rows whose counterpart index differs from
/// their own position.
fn count_refactorings(conn: &Connection) -> Result<u64> {
    let mut stmt = conn.prepare(
        "SELECT SENTENCE_ID, TAG_NEW FROM sentence_diffs WHERE TAG_NEW LIKE 'M %' AND TAG_NEW LIKE '% U'",
    )?;
    let rows = stmt.query_map([], |row| {
        Ok((row.get::<_, u32>(0)?, row.get::<_, String>(1)?))
    })?;
    let mut count = 0u64;
    for row in rows {
        let (sentence_id, tag) = row?;
        if let Ok(Tag::Matched { indices, .. }) = tag.parse::<Tag>() {
            if indices.as_slice() != [sentence_id] {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Corpus totals printed by the `stats` subcommand.
///
/// Added and changed/unchanged counts read the new side of each pair,
/// removed reads the old side, matching the way the headline counts of a
/// revision corpus are quoted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusStats {
    pub articles: u64,
    pub versions: u64,
    pub version_pairs: u64,
    pub sentences_added: u64,
    pub sentences_removed: u64,
    pub sentences_changed: u64,
    pub sentences_unchanged: u64,
    pub refactorings: u64,
    pub atomic_edits: u64,
}

/// One sentence_diffs row as stored (tags still serialized).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredDiffRow {
    pub key: PairKey,
    pub sentence_id: u32,
    pub sent_old: String,
    pub tag_old: String,
    pub sent_new: String,
    pub tag_new: String,
}

impl StoredDiffRow {
    pub fn parsed_tag_old(&self) -> Result<Option<Tag>> {
        if self.tag_old.is_empty() {
            Ok(None)
        } else {
            Ok(Some(self.tag_old.parse()?))
        }
    }

    pub fn parsed_tag_new(&self) -> Result<Option<Tag>> {
        if self.tag_new.is_empty() {
            Ok(None)
        } else {
            Ok(Some(self.tag_new.parse()?))
        }
    }
}

/// Counts from a [`CorpusDb::write_pairs`] call.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct WriteReport {
    pub pairs: u64,
    pub sentence_rows: u64,
    pub word_rows: u64,
    pub transactions: u64,
}

fn write_one_pair(
    tx: &rusqlite::Transaction<'_>,
    pair: &PairDiff,
    report: &mut WriteReport,
) -> Result<()> {
    let mut sent_stmt = tx.prepare_cached(
        "INSERT INTO sentence_diffs \
         (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, SENTENCE_ID, SENT_OLD, TAG_OLD, SENT_NEW, TAG_NEW) \
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)",
    )?;
    for row in &pair.rows {
        let k = &row.key;
        sent_stmt.execute(params![
            k.source,
            k.article_id,
            k.v_old_id,
            k.v_new_id,
            row.sentence_id,
            row.sent_old().unwrap_or(""),
            row.tag_old().map(Tag::to_string).unwrap_or_default(),
            row.sent_new().unwrap_or(""),
            row.tag_new().map(Tag::to_string).unwrap_or_default(),
        ])?;
        report.sentence_rows += 1;
    }

    let mut word_stmt = tx.prepare_cached(
        "INSERT INTO word_diffs \
         (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, SENTENCE_ID, EDIT_ID, DIRECTION, TOKENS, ANCHOR) \
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)",
    )?;
    for w in &pair.word_rows {
        let k = &w.row_ref.key;
        word_stmt.execute(params![
            k.source,
            k.article_id,
            k.v_old_id,
            k.v_new_id,
            w.row_ref.sentence_id,
            w.edit_id,
            w.direction,
            w.tokens,
            w.anchor,
        ])?;
        report.word_rows += 1;
    }

    let s = &pair.summary;
    tx.prepare_cached(
        "INSERT INTO sentence_diff_stats \
         (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, NUM_SENTENCES_ADDED, NUM_SENTENCES_REMOVED, \
          NUM_SENTENCES_CHANGED, NUM_SENTENCES_UNCHANGED, NUM_REFACTORED) \
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)",
    )?
    .execute(params![
        s.key.source,
        s.key.article_id,
        s.key.v_old_id,
        s.key.v_new_id,
        s.num_sentences_added,
        s.num_sentences_removed,
        s.num_sentences_changed,
        s.num_sentences_unchanged,
        s.num_refactored,
    ])?;
    tx.prepare_cached(
        "INSERT INTO word_diff_stats \
         (SOURCE, A_ID, V_OLD_ID, V_NEW_ID, NUM_ATOMIC_EDITS, NUM_INSERTIONS, NUM_DELETIONS) \
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
    )?
    .execute(params![
        s.key.source,
        s.key.article_id,
        s.key.v_old_id,
        s.key.v_new_id,
        s.num_atomic_edits,
        s.num_insertions,
        s.num_deletions,
    ])?;
    report.pairs += 1;
    Ok(())
}

/// Write a complete corpus in one call: articles plus per-pair diffs.
pub fn write_corpus(
    articles: &[ArticleVersionRecord],
    pairs: &[PairDiff],
    path: &Path,
) -> Result<WriteReport> {
    let mut db = CorpusDb::open(path)?;
    db.insert_articles(articles)?;
    db.write_pairs(pairs, 500)
}
