//! Whole-database validation.
//!
//! Re-derives every structural invariant from the stored tables alone: tag
//! grammar, side presence, cross-consistency of matched indices, row-count
//! conservation, word-diff coverage and summary-vs-recount equality.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use regex::Regex;

use crate::diffgen::{Change, PairKey, Tag};
use crate::error::Result;
use crate::ingest::parse_timestamp;
use crate::store::{compute_summary, CorpusDb, StoredDiffRow};

/// One invariant violation, keyed by the row or pair it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// Outcome of validating one database.
#[derive(Debug, Default)]
pub struct ValidationReport {
    pub articles: u64,
    pub pairs: u64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    fn fail(&mut self, key: impl fmt::Display, message: impl Into<String>) {
        self.violations.push(Violation {
            key: key.to_string(),
            message: message.into(),
        });
    }
}

/// Validate every stored invariant of a corpus database.
pub fn validate_db(path: &Path) -> Result<ValidationReport> {
    let db = CorpusDb::open_readonly(path)?;
    let mut report = ValidationReport::default();
    // Grammar of serialized tags: A, R, or M with ascending indices and flag.
    let tag_grammar = Regex::new(r"^(A|R|M( [1-9][0-9]*)+ [CU])$").unwrap();

    validate_articles(&db, &mut report)?;
    let keys = db.pair_keys()?;
    report.pairs = keys.len() as u64;
    for key in &keys {
        validate_pair(&db, key, &tag_grammar, &mut report)?;
    }
    validate_stats_coverage(&db, &keys, &mut report)?;
    Ok(report)
}

fn validate_articles(db: &CorpusDb, report: &mut ValidationReport) -> Result<()> {
    let mut stmt = db.conn().prepare(
        "SELECT SOURCE, A_ID, VERSION_ID, TEXT, CREATED, NUM_VERSIONS FROM articles \
         ORDER BY SOURCE, A_ID, VERSION_ID",
    )?;
    let rows = stmt.query_map([], |r| {
        Ok((
            r.get::<_, String>(0)?,
            r.get::<_, i64>(1)?,
            r.get::<_, u32>(2)?,
            r.get::<_, String>(3)?,
            r.get::<_, String>(4)?,
            r.get::<_, u32>(5)?,
        ))
    })?;

    let mut per_article: HashMap<(String, i64), Vec<(u32, u32)>> = HashMap::new();
    for row in rows {
        let (source, a_id, version_id, text, created, num_versions) = row?;
        let key = format!("article ({source}, {a_id}, {version_id})");
        if text.trim().is_empty() {
            report.fail(&key, "empty TEXT");
        }
        if parse_timestamp(&created).is_err() {
            report.fail(&key, format!("unparsable CREATED {created:?}"));
        }
        per_article
            .entry((source, a_id))
            .or_default()
            .push((version_id, num_versions));
    }
    report.articles = per_article.len() as u64;
    for ((source, a_id), versions) in per_article {
        let key = format!("article ({source}, {a_id})");
        let n = versions.len() as u32;
        let ids: Vec<u32> = versions.iter().map(|&(v, _)| v).collect();
        if ids != (1..=n).collect::<Vec<u32>>() {
            report.fail(&key, format!("version ids {ids:?} not dense 1..{n}"));
        }
        if versions.iter().any(|&(_, nv)| nv != n) {
            report.fail(&key, format!("NUM_VERSIONS disagrees with count {n}"));
        }
    }
    Ok(())
}

fn validate_pair(
    db: &CorpusDb,
    key: &PairKey,
    tag_grammar: &Regex,
    report: &mut ValidationReport,
) -> Result<()> {
    let rows = db.read_pair_rows(key)?;
    let word_rows = db.read_pair_word_rows(key)?;

    // Row ids dense 1..max.
    let ids: Vec<u32> = rows.iter().map(|r| r.sentence_id).collect();
    if ids != (1..=rows.len() as u32).collect::<Vec<u32>>() {
        report.fail(key, format!("sentence ids {ids:?} not dense"));
    }

    let mut old_rows: Vec<&StoredDiffRow> = Vec::new();
    let mut new_rows: Vec<&StoredDiffRow> = Vec::new();
    for row in &rows {
        let row_key = format!("{key} row {}", row.sentence_id);
        for (side, sent, tag) in [
            ("old", &row.sent_old, &row.tag_old),
            ("new", &row.sent_new, &row.tag_new),
        ] {
            if sent.is_empty() != tag.is_empty() {
                report.fail(&row_key, format!("{side} side half-populated"));
            }
            if !tag.is_empty() && !tag_grammar.is_match(tag) {
                report.fail(&row_key, format!("tag {tag:?} violates grammar"));
            }
        }
        if row.tag_old == "A" {
            report.fail(&row_key, "old side tagged A");
        }
        if row.tag_new == "R" {
            report.fail(&row_key, "new side tagged R");
        }
        if !row.tag_old.is_empty() {
            old_rows.push(row);
        }
        if !row.tag_new.is_empty() {
            new_rows.push(row);
        }
    }

    // Old/new sides must fill rows 1..k contiguously from the top.
    for (side, side_rows) in [("old", &old_rows), ("new", &new_rows)] {
        let ok = side_rows
            .iter()
            .enumerate()
            .all(|(i, r)| r.sentence_id == i as u32 + 1);
        if !ok {
            report.fail(key, format!("{side} side rows are not a prefix of row ids"));
        }
    }

    // Cross-consistency and index ranges; also ascending indices per tag.
    let old_tags: Vec<Option<Tag>> = old_rows
        .iter()
        .map(|r| r.parsed_tag_old().ok().flatten())
        .collect();
    let new_tags: Vec<Option<Tag>> = new_rows
        .iter()
        .map(|r| r.parsed_tag_new().ok().flatten())
        .collect();
    for (i, tag) in old_tags.iter().enumerate() {
        let Some(tag) = tag else { continue };
        for &j in tag.matched_indices() {
            let row_key = format!("{key} old row {}", i + 1);
            match new_tags.get(j as usize - 1).and_then(Option::as_ref) {
                Some(counter) if counter.matched_indices().contains(&(i as u32 + 1)) => {}
                Some(_) => report.fail(&row_key, format!("new row {j} does not reciprocate")),
                None => report.fail(&row_key, format!("matched index {j} out of range")),
            }
        }
    }
    for (j, tag) in new_tags.iter().enumerate() {
        let Some(tag) = tag else { continue };
        for &i in tag.matched_indices() {
            let row_key = format!("{key} new row {}", j + 1);
            match old_tags.get(i as usize - 1).and_then(Option::as_ref) {
                Some(counter) if counter.matched_indices().contains(&(j as u32 + 1)) => {}
                Some(_) => report.fail(&row_key, format!("old row {i} does not reciprocate")),
                None => report.fail(&row_key, format!("matched index {i} out of range")),
            }
        }
    }

    // Word-diff coverage: every old-side M row has word rows; A/R rows none.
    let mut word_by_sentence: HashMap<u32, Vec<&super::WordDiffRow>> = HashMap::new();
    for w in &word_rows {
        let row_key = format!("{key} word row {}/{}", w.row_ref.sentence_id, w.edit_id);
        if !matches!(w.direction.as_str(), "insertion" | "deletion" | "none") {
            report.fail(&row_key, format!("bad DIRECTION {:?}", w.direction));
        }
        word_by_sentence
            .entry(w.row_ref.sentence_id)
            .or_default()
            .push(w);
    }
    for (i, tag) in old_tags.iter().enumerate() {
        let sentence_id = i as u32 + 1;
        let row_key = format!("{key} old row {sentence_id}");
        let entries = word_by_sentence.remove(&sentence_id).unwrap_or_default();
        match tag {
            Some(Tag::Matched { change, .. }) => {
                if entries.is_empty() {
                    report.fail(&row_key, "matched row without word_diffs entry");
                } else if *change == Change::Unchanged {
                    if entries.len() != 1 || entries[0].direction != "none" {
                        report.fail(&row_key, "unchanged row must hold one zero-op marker");
                    }
                } else {
                    let edits = entries.iter().filter(|w| w.direction != "none").count();
                    if edits == 0 && entries.len() != 1 {
                        report.fail(&row_key, "changed row with neither edits nor marker");
                    }
                    let mut ids: Vec<u32> = entries
                        .iter()
                        .filter(|w| w.direction != "none")
                        .map(|w| w.edit_id)
                        .collect();
                    ids.sort_unstable();
                    if ids != (1..=ids.len() as u32).collect::<Vec<u32>>() {
                        report.fail(&row_key, format!("edit ids {ids:?} not dense"));
                    }
                }
            }
            _ => {
                if !entries.is_empty() {
                    report.fail(&row_key, "word_diffs entry for non-matched row");
                }
            }
        }
    }
    for sentence_id in word_by_sentence.keys() {
        report.fail(
            format!("{key} word row {sentence_id}"),
            "word_diffs entry without old-side sentence row",
        );
    }

    // Summary recount.
    let rebuilt: Result<Vec<crate::diffgen::DiffRow>> =
        rows.iter().map(stored_to_diffrow).collect();
    match rebuilt {
        Ok(diff_rows) => {
            let recount = compute_summary(&diff_rows, &word_rows)?;
            let stored = read_summary(db, key)?;
            match stored {
                Some(stored) => {
                    let want = (
                        recount.num_sentences_added,
                        recount.num_sentences_removed,
                        recount.num_sentences_changed,
                        recount.num_sentences_unchanged,
                        recount.num_refactored,
                        recount.num_atomic_edits,
                        recount.num_insertions,
                        recount.num_deletions,
                    );
                    let got = (
                        stored.0, stored.1, stored.2, stored.3, stored.4, stored.5, stored.6,
                        stored.7,
                    );
                    if want != got {
                        report.fail(
                            key,
                            format!("summary mismatch: stored {got:?}, recount {want:?}"),
                        );
                    }
                }
                None => report.fail(key, "missing summary rows"),
            }
        }
        Err(e) => report.fail(key, format!("rows unparsable for recount: {e}")),
    }
    Ok(())
}

#[allow(clippy::type_complexity)]
fn read_summary(
    db: &CorpusDb,
    key: &PairKey,
) -> Result<Option<(u32, u32, u32, u32, u32, u32, u32, u32)>> {
    let sent = db
        .conn()
        .query_row(
            "SELECT NUM_SENTENCES_ADDED, NUM_SENTENCES_REMOVED, NUM_SENTENCES_CHANGED, \
             NUM_SENTENCES_UNCHANGED, NUM_REFACTORED FROM sentence_diff_stats \
             WHERE SOURCE = ?1 AND A_ID = ?2 AND V_OLD_ID = ?3 AND V_NEW_ID = ?4",
            rusqlite::params![key.source, key.article_id, key.v_old_id, key.v_new_id],
            |r| {
                Ok((
                    r.get::<_, u32>(0)?,
                    r.get::<_, u32>(1)?,
                    r.get::<_, u32>(2)?,
                    r.get::<_, u32>(3)?,
                    r.get::<_, u32>(4)?,
                ))
            },
        )
        .map(Some)
        .or_else(ignore_no_rows)?;
    let word = db
        .conn()
        .query_row(
            "SELECT NUM_ATOMIC_EDITS, NUM_INSERTIONS, NUM_DELETIONS FROM word_diff_stats \
             WHERE SOURCE = ?1 AND A_ID = ?2 AND V_OLD_ID = ?3 AND V_NEW_ID = ?4",
            rusqlite::params![key.source, key.article_id, key.v_old_id, key.v_new_id],
            |r| Ok((r.get::<_, u32>(0)?, r.get::<_, u32>(1)?, r.get::<_, u32>(2)?)),
        )
        .map(Some)
        .or_else(ignore_no_rows)?;
    Ok(match (sent, word) {
        (Some(s), Some(w)) => Some((s.0, s.1, s.2, s.3, s.4, w.0, w.1, w.2)),
        _ => None,
    })
}

fn ignore_no_rows<T>(e: rusqlite::Error) -> std::result::Result<Option<T>, rusqlite::Error> {
    match e {
        rusqlite::Error::QueryReturnedNoRows => Ok(None),
        other => Err(other),
    }
}

fn stored_to_diffrow(row: &StoredDiffRow) -> Result<crate::diffgen::DiffRow> {
    use crate::diffgen::{DiffRow, RowSide};
    Ok(DiffRow {
        key: row.key.clone(),
        sentence_id: row.sentence_id,
        old: match row.parsed_tag_old()? {
            Some(tag) => Some(RowSide {
                text: row.sent_old.clone(),
                tag,
            }),
            None => None,
        },
        new: match row.parsed_tag_new()? {
            Some(tag) => Some(RowSide {
                text: row.sent_new.clone(),
                tag,
            }),
            None => None,
        },
    })
}

/// Every stats row must reference an existing pair.
fn validate_stats_coverage(
    db: &CorpusDb,
    keys: &[PairKey],
    report: &mut ValidationReport,
) -> Result<()> {
    for table in ["sentence_diff_stats", "word_diff_stats"] {
        let mut stmt = db.conn().prepare(&format!(
            "SELECT SOURCE, A_ID, V_OLD_ID, V_NEW_ID FROM {table} ORDER BY SOURCE, A_ID, V_OLD_ID"
        ))?;
        let stat_keys: Vec<PairKey> = stmt
            .query_map([], |r| {
                Ok(PairKey {
                    source: r.get(0)?,
                    article_id: r.get(1)?,
                    v_old_id: r.get(2)?,
                    v_new_id: r.get(3)?,
                })
            })?
            .collect::<std::result::Result<_, _>>()?;
        for k in &stat_keys {
            if keys.binary_search(k).is_err() {
                report.fail(k, format!("{table} row without sentence_diffs rows"));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffgen::word::{AtomicEdit, EditDirection, RowRef};
    use crate::diffgen::{DiffRow, RowSide};
    use crate::store::{write_corpus, PairDiff, WordDiffRow};
    use crate::ingest::ArticleVersionRecord;
    use tempfile::tempdir;

    fn key() -> PairKey {
        PairKey {
            source: "s".into(),
            article_id: 1,
            v_old_id: 1,
            v_new_id: 2,
        }
    }

    fn article(v: u32) -> ArticleVersionRecord {
        ArticleVersionRecord {
            source: "s".into(),
            article_id: 1,
            version_id: v,
            title: String::new(),
            url: String::new(),
            archive_url: String::new(),
            text: format!("Version {v}."),
            created: parse_timestamp("2020-01-01T00:00:00Z").unwrap(),
            num_versions: 2,
        }
    }

    fn fixture(dir: &Path) -> std::path::PathBuf {
        let path = dir.join("v.db");
        let k = key();
        let rows = vec![
            DiffRow {
                key: k.clone(),
                sentence_id: 1,
                old: Some(RowSide {
                    text: "Old one.".into(),
                    tag: "M 1 C".parse().unwrap(),
                }),
                new: Some(RowSide {
                    text: "New one.".into(),
                    tag: "M 1 C".parse().unwrap(),
                }),
            },
            DiffRow {
                key: k.clone(),
                sentence_id: 2,
                old: None,
                new: Some(RowSide {
                    text: "Fresh.".into(),
                    tag: Tag::Added,
                }),
            },
        ];
        let word_rows = vec![WordDiffRow::from_edit(
            &AtomicEdit {
                direction: EditDirection::Insertion,
                tokens: vec!["New".into()],
                anchor: 0,
                row_ref: RowRef {
                    key: k.clone(),
                    sentence_id: 1,
                },
            },
            1,
        )];
        let summary = compute_summary(&rows, &word_rows).unwrap();
        write_corpus(
            &[article(1), article(2)],
            &[PairDiff {
                rows,
                word_rows,
                summary,
            }],
            &path,
        )
        .unwrap();
        path
    }

    #[test]
    fn fresh_fixture_is_clean() {
        let dir = tempdir().unwrap();
        let path = fixture(dir.path());
        let report = validate_db(&path).unwrap();
        assert!(report.is_clean(), "violations: {:?}", report.violations);
        assert_eq!(report.pairs, 1);
        assert_eq!(report.articles, 1);
    }

    #[test]
    fn corrupted_tag_is_one_grammar_violation() {
        let dir = tempdir().unwrap();
        let path = fixture(dir.path());
        let conn = rusqlite::Connection::open(&path).unwrap();
        conn.execute("UPDATE sentence_diffs SET TAG_OLD = 'M C' WHERE SENTENCE_ID = 1", [])
            .unwrap();
        drop(conn);
        let report = validate_db(&path).unwrap();
        let grammar: Vec<_> = report
            .violations
            .iter()
            .filter(|v| v.message.contains("violates grammar"))
            .collect();
        assert_eq!(grammar.len(), 1);
        assert!(grammar[0].key.contains("row 1"));
    }

    #[test]
    fn decremented_summary_is_recount_mismatch() {
        let dir = tempdir().unwrap();
        let path = fixture(dir.path());
        let conn = rusqlite::Connection::open(&path).unwrap();
        conn.execute(
            "UPDATE sentence_diff_stats SET NUM_SENTENCES_ADDED = NUM_SENTENCES_ADDED - 1",
            [],
        )
        .unwrap();
        drop(conn);
        let report = validate_db(&path).unwrap();
        let mismatches: Vec<_> = report
            .violations
            .iter()
            .filter(|v| v.message.contains("summary mismatch"))
            .collect();
        assert_eq!(mismatches.len(), 1);
    }

    #[test]
    fn missing_marker_is_flagged() {
        let dir = tempdir().unwrap();
        let path = fixture(dir.path());
        let conn = rusqlite::Connection::open(&path).unwrap();
        conn.execute("DELETE FROM word_diffs", []).unwrap();
        // Keep summaries consistent so only the coverage check fires.
        conn.execute(
            "UPDATE word_diff_stats SET NUM_ATOMIC_EDITS = 0, NUM_INSERTIONS = 0, NUM_DELETIONS = 0",
            [],
        )
        .unwrap();
        drop(conn);
        let report = validate_db(&path).unwrap();
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("without word_diffs entry")));
    }
}
