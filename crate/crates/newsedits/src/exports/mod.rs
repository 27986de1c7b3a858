//! Dataset exports.
//!
//! Four canonical read paths over a corpus database, streamed as JSONL or
//! TSV in primary-key order so re-running an export is byte-identical:
//!
//! 1. atomic edits — matched-changed sentence pairs joined to their
//!    word-level edit runs;
//! 2. refactorings — matched-unchanged sentences whose position moved;
//! 3. addition modeling — every old sentence as context plus added new
//!    sentences, labeled;
//! 4. removal modeling — the mirror image: new sentences as context plus
//!    removed old sentences.

pub mod html;

use std::io::Write;

use chrono::{DateTime, FixedOffset};
use serde::Serialize;

use crate::diffgen::{Change, PairKey, Tag};
use crate::error::{Error, Result};
use crate::ingest::parse_timestamp;
use crate::store::CorpusDb;

/// Row filters shared by all exports.
///
/// Date bounds apply to the CREATED timestamp of the pair's new version; the
/// added/removed bounds read the cached summary table.
#[derive(Debug, Clone, Default)]
pub struct Filters {
    pub sources: Option<Vec<String>>,
    pub date_from: Option<DateTime<FixedOffset>>,
    pub date_to: Option<DateTime<FixedOffset>>,
    pub min_added: Option<u32>,
    pub max_added: Option<u32>,
    pub min_removed: Option<u32>,
    pub max_removed: Option<u32>,
}

impl Filters {
    fn is_empty(&self) -> bool {
        self.sources.is_none()
            && self.date_from.is_none()
            && self.date_to.is_none()
            && self.min_added.is_none()
            && self.max_added.is_none()
            && self.min_removed.is_none()
            && self.max_removed.is_none()
    }
}

/// Output serialization of an export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Jsonl,
    Tsv,
}

impl ExportFormat {
    pub fn parse(s: &str) -> Result<ExportFormat> {
        match s {
            "jsonl" => Ok(ExportFormat::Jsonl),
            "tsv" => Ok(ExportFormat::Tsv),
            other => Err(Error::InvalidConfig(format!(
                "unknown export format {other:?} (expected jsonl or tsv)"
            ))),
        }
    }
}

/// The four published query use cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UseCase {
    AtomicEdits,
    Refactorings,
    AdditionModeling,
    RemovalModeling,
}

impl UseCase {
    pub fn from_number(n: u8) -> Result<UseCase> {
        match n {
            1 => Ok(UseCase::AtomicEdits),
            2 => Ok(UseCase::Refactorings),
            3 => Ok(UseCase::AdditionModeling),
            4 => Ok(UseCase::RemovalModeling),
            other => Err(Error::InvalidConfig(format!(
                "use case must be 1..=4, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Serialize)]
struct EditRun {
    direction: String,
    tokens: String,
    anchor: u32,
}

/// Use case 1 record: one matched-changed sentence with its edit runs.
#[derive(Debug, Serialize)]
pub struct AtomicEditRecord {
    pub source: String,
    pub a_id: i64,
    pub v_old_id: u32,
    pub v_new_id: u32,
    pub sentence_id: u32,
    pub sent_old: String,
    pub sent_new: String,
    edits: Vec<EditRun>,
}

/// Use case 2 record: one moved sentence.
#[derive(Debug, Serialize)]
pub struct RefactoringRecord {
    pub source: String,
    pub a_id: i64,
    pub v_old_id: u32,
    pub v_new_id: u32,
    pub old_index: u32,
    pub new_index: u32,
    pub sentence: String,
}

/// Use case 3/4 record: one labeled context or event sentence.
#[derive(Debug, Serialize)]
pub struct ModelingRecord {
    pub source: String,
    pub a_id: i64,
    pub v_old_id: u32,
    pub v_new_id: u32,
    pub sentence_id: u32,
    /// "old" or "new".
    pub side: String,
    pub sentence: String,
    /// Use case 3: sentence was added; use case 4: sentence was removed.
    pub label: bool,
}

/// Run one export against a database, writing records to `out`.
///
/// Returns the record count. Ordering is fixed by (SOURCE, A_ID, V_OLD_ID,
/// SENTENCE_ID), so identical inputs yield byte-identical output.
pub fn run_export(
    db: &CorpusDb,
    use_case: UseCase,
    filters: &Filters,
    format: ExportFormat,
    out: &mut dyn Write,
) -> Result<u64> {
    let keys = filtered_pair_keys(db, filters)?;
    let mut sink = Sink::new(format, out, use_case);
    for key in &keys {
        match use_case {
            UseCase::AtomicEdits => export_atomic_edits(db, key, &mut sink)?,
            UseCase::Refactorings => export_refactorings(db, key, &mut sink)?,
            UseCase::AdditionModeling => export_addition_modeling(db, key, &mut sink)?,
            UseCase::RemovalModeling => export_removal_modeling(db, key, &mut sink)?,
        }
    }
    sink.finish()
}

/// Pair keys surviving the filters, in primary-key order.
fn filtered_pair_keys(db: &CorpusDb, filters: &Filters) -> Result<Vec<PairKey>> {
    let keys = db.pair_keys()?;
    if filters.is_empty() {
        return Ok(keys);
    }
    let mut kept = Vec::with_capacity(keys.len());
    'keys: for key in keys {
        if let Some(sources) = &filters.sources {
            if !sources.contains(&key.source) {
                continue;
            }
        }
        if filters.date_from.is_some() || filters.date_to.is_some() {
            let created: Option<String> = db
                .conn()
                .query_row(
                    "SELECT CREATED FROM articles WHERE SOURCE = ?1 AND A_ID = ?2 AND VERSION_ID = ?3",
                    rusqlite::params![key.source, key.article_id, key.v_new_id],
                    |r| r.get(0),
                )
                .map(Some)
                .unwrap_or(None);
            let Some(created) = created.and_then(|c| parse_timestamp(&c).ok()) else {
                continue 'keys;
            };
            if filters.date_from.is_some_and(|from| created < from) {
                continue;
            }
            if filters.date_to.is_some_and(|to| created > to) {
                continue;
            }
        }
        if filters.min_added.is_some()
            || filters.max_added.is_some()
            || filters.min_removed.is_some()
            || filters.max_removed.is_some()
        {
            let counts: Option<(u32, u32)> = db
                .conn()
                .query_row(
                    "SELECT NUM_SENTENCES_ADDED, NUM_SENTENCES_REMOVED FROM sentence_diff_stats \
                     WHERE SOURCE = ?1 AND A_ID = ?2 AND V_OLD_ID = ?3 AND V_NEW_ID = ?4",
                    rusqlite::params![key.source, key.article_id, key.v_old_id, key.v_new_id],
                    |r| Ok((r.get(0)?, r.get(1)?)),
                )
                .map(Some)
                .unwrap_or(None);
            let Some((added, removed)) = counts else {
                continue 'keys;
            };
            if filters.min_added.is_some_and(|m| added < m)
                || filters.max_added.is_some_and(|m| added > m)
                || filters.min_removed.is_some_and(|m| removed < m)
                || filters.max_removed.is_some_and(|m| removed > m)
            {
                continue;
            }
        }
        kept.push(key);
    }
    Ok(kept)
}

fn export_atomic_edits(db: &CorpusDb, key: &PairKey, sink: &mut Sink<'_>) -> Result<()> {
    let rows = db.read_pair_rows(key)?;
    let word_rows = db.read_pair_word_rows(key)?;
    let new_texts: Vec<&str> = rows
        .iter()
        .filter(|r| !r.tag_new.is_empty())
        .map(|r| r.sent_new.as_str())
        .collect();
    for row in &rows {
        let Some(Tag::Matched { indices, change }) = row.parsed_tag_old()? else {
            continue;
        };
        if change != Change::Changed {
            continue;
        }
        let sent_new = indices
            .iter()
            .filter_map(|&j| new_texts.get(j as usize - 1).copied())
            .collect::<Vec<_>>()
            .join(" ");
        let edits: Vec<EditRun> = word_rows
            .iter()
            .filter(|w| w.row_ref.sentence_id == row.sentence_id && w.direction != "none")
            .map(|w| EditRun {
                direction: w.direction.clone(),
                tokens: w.tokens.clone(),
                anchor: w.anchor,
            })
            .collect();
        sink.write_atomic(&AtomicEditRecord {
            source: key.source.clone(),
            a_id: key.article_id,
            v_old_id: key.v_old_id,
            v_new_id: key.v_new_id,
            sentence_id: row.sentence_id,
            sent_old: row.sent_old.clone(),
            sent_new,
            edits,
        })?;
    }
    Ok(())
}

fn export_refactorings(db: &CorpusDb, key: &PairKey, sink: &mut Sink<'_>) -> Result<()> {
    for row in db.read_pair_rows(key)? {
        let Some(Tag::Matched { indices, change }) = row.parsed_tag_old()? else {
            continue;
        };
        if change != Change::Unchanged || indices.as_slice() == [row.sentence_id] {
            continue;
        }
        for &j in &indices {
            sink.write_refactoring(&RefactoringRecord {
                source: key.source.clone(),
                a_id: key.article_id,
                v_old_id: key.v_old_id,
                v_new_id: key.v_new_id,
                old_index: row.sentence_id,
                new_index: j,
                sentence: row.sent_old.clone(),
            })?;
        }
    }
    Ok(())
}

fn export_addition_modeling(db: &CorpusDb, key: &PairKey, sink: &mut Sink<'_>) -> Result<()> {
    for row in db.read_pair_rows(key)? {
        if !row.tag_old.is_empty() {
            sink.write_modeling(&ModelingRecord {
                source: key.source.clone(),
                a_id: key.article_id,
                v_old_id: key.v_old_id,
                v_new_id: key.v_new_id,
                sentence_id: row.sentence_id,
                side: "old".into(),
                sentence: row.sent_old.clone(),
                label: false,
            })?;
        }
        if row.tag_new == "A" {
            sink.write_modeling(&ModelingRecord {
                source: key.source.clone(),
                a_id: key.article_id,
                v_old_id: key.v_old_id,
                v_new_id: key.v_new_id,
                sentence_id: row.sentence_id,
                side: "new".into(),
                sentence: row.sent_new.clone(),
                label: true,
            })?;
        }
    }
    Ok(())
}

fn export_removal_modeling(db: &CorpusDb, key: &PairKey, sink: &mut Sink<'_>) -> Result<()> {
    for row in db.read_pair_rows(key)? {
        if !row.tag_new.is_empty() {
            sink.write_modeling(&ModelingRecord {
                source: key.source.clone(),
                a_id: key.article_id,
                v_old_id: key.v_old_id,
                v_new_id: key.v_new_id,
                sentence_id: row.sentence_id,
                side: "new".into(),
                sentence: row.sent_new.clone(),
                label: false,
            })?;
        }
        if row.tag_old == "R" {
            sink.write_modeling(&ModelingRecord {
                source: key.source.clone(),
                a_id: key.article_id,
                v_old_id: key.v_old_id,
                v_new_id: key.v_new_id,
                sentence_id: row.sentence_id,
                side: "old".into(),
                sentence: row.sent_old.clone(),
                label: true,
            })?;
        }
    }
    Ok(())
}

/// Serializer for one export run.
struct Sink<'a> {
    format: ExportFormat,
    out: &'a mut dyn Write,
    count: u64,
    header_written: bool,
    use_case: UseCase,
}

impl<'a> Sink<'a> {
    fn new(format: ExportFormat, out: &'a mut dyn Write, use_case: UseCase) -> Sink<'a> {
        Sink {
            format,
            out,
            count: 0,
            header_written: false,
            use_case,
        }
    }

    fn finish(self) -> Result<u64> {
        Ok(self.count)
    }

    fn tsv_header(&mut self) -> Result<()> {
        if self.header_written {
            return Ok(());
        }
        let header = match self.use_case {
            UseCase::AtomicEdits => {
                "source\ta_id\tv_old_id\tv_new_id\tsentence_id\tsent_old\tsent_new\tedits"
            }
            UseCase::Refactorings => {
                "source\ta_id\tv_old_id\tv_new_id\told_index\tnew_index\tsentence"
            }
            UseCase::AdditionModeling | UseCase::RemovalModeling => {
                "source\ta_id\tv_old_id\tv_new_id\tsentence_id\tside\tsentence\tlabel"
            }
        };
        writeln!(self.out, "{header}")?;
        self.header_written = true;
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut *self.out, record)
            .map_err(|e| Error::Domain(format!("serialize export record: {e}")))?;
        self.out.write_all(b"\n")?;
        self.count += 1;
        Ok(())
    }

    fn write_atomic(&mut self, r: &AtomicEditRecord) -> Result<()> {
        match self.format {
            ExportFormat::Jsonl => self.write_json(r),
            ExportFormat::Tsv => {
                self.tsv_header()?;
                let edits = r
                    .edits
                    .iter()
                    .map(|e| format!("{}@{}:{}", e.direction, e.anchor, e.tokens))
                    .collect::<Vec<_>>()
                    .join("|");
                writeln!(
                    self.out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.source,
                    r.a_id,
                    r.v_old_id,
                    r.v_new_id,
                    r.sentence_id,
                    tsv_escape(&r.sent_old),
                    tsv_escape(&r.sent_new),
                    tsv_escape(&edits),
                )?;
                self.count += 1;
                Ok(())
            }
        }
    }

    fn write_refactoring(&mut self, r: &RefactoringRecord) -> Result<()> {
        match self.format {
            ExportFormat::Jsonl => self.write_json(r),
            ExportFormat::Tsv => {
                self.tsv_header()?;
                writeln!(
                    self.out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.source,
                    r.a_id,
                    r.v_old_id,
                    r.v_new_id,
                    r.old_index,
                    r.new_index,
                    tsv_escape(&r.sentence),
                )?;
                self.count += 1;
                Ok(())
            }
        }
    }

    fn write_modeling(&mut self, r: &ModelingRecord) -> Result<()> {
        match self.format {
            ExportFormat::Jsonl => self.write_json(r),
            ExportFormat::Tsv => {
                self.tsv_header()?;
                writeln!(
                    self.out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.source,
                    r.a_id,
                    r.v_old_id,
                    r.v_new_id,
                    r.sentence_id,
                    r.side,
                    tsv_escape(&r.sentence),
                    r.label,
                )?;
                self.count += 1;
                Ok(())
            }
        }
    }
}

/// Sentences have collapsed whitespace already; this guards stray tabs in
/// titles or foreign data.
fn tsv_escape(s: &str) -> String {
    if s.contains(['\t', '\n', '\r']) {
        s.replace(['\t', '\n', '\r'], " ")
    } else {
        s.to_string()
    }
}
