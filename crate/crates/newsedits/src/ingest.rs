//! Corpus ingest: parse raw version dumps, group them into per-article
//! histories and enumerate adjacent version pairs.
//!
//! Input is one record per article version, as JSON-lines or CSV with a
//! header row. Field names follow the published dump format: `source`,
//! `a_id`, `version_id`, `title`, `url`, `archive_url`, `text`, `created`
//! (ISO-8601 with zone designator) and optionally `num_versions`, which is
//! recomputed during grouping anyway.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};

use chrono::{DateTime, FixedOffset};
use log::warn;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::hash::id_hash63;

/// One published version of one article.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleVersionRecord {
    pub source: String,
    pub article_id: i64,
    pub version_id: u32,
    pub title: String,
    pub url: String,
    pub archive_url: String,
    pub text: String,
    pub created: DateTime<FixedOffset>,
    /// Count of versions within this article's history.
    pub num_versions: u32,
}

impl ArticleVersionRecord {
    pub fn created_iso(&self) -> String {
        self.created.to_rfc3339()
    }
}

/// All versions of one article, sorted and densely renumbered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleHistory {
    pub source: String,
    pub article_id: i64,
    pub versions: Vec<ArticleVersionRecord>,
}

/// Two adjacent versions of the same article: the unit of diffing.
#[derive(Debug, Clone, Copy)]
pub struct VersionPair<'a> {
    pub v_old: &'a ArticleVersionRecord,
    pub v_new: &'a ArticleVersionRecord,
}

impl<'a> VersionPair<'a> {
    pub fn source(&self) -> &'a str {
        &self.v_old.source
    }

    pub fn article_id(&self) -> i64 {
        self.v_old.article_id
    }
}

/// Input serialization of a corpus dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    pub fn parse(s: &str) -> Result<CorpusFormat> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::InvalidConfig(format!(
                "unknown corpus format {other:?} (expected jsonl or csv)"
            ))),
        }
    }
}

/// The `a_id` field may be an integer or a URL-like string.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawArticleId {
    Int(i64),
    Str(String),
}

#[derive(Deserialize)]
struct RawRecord {
    source: Option<String>,
    a_id: Option<RawArticleId>,
    version_id: Option<u32>,
    #[serde(default)]
    title: String,
    #[serde(default)]
    url: String,
    #[serde(default)]
    archive_url: String,
    text: Option<String>,
    created: Option<String>,
    #[serde(default)]
    num_versions: Option<u32>,
}

impl RawRecord {
    fn validate(self, line: u64) -> std::result::Result<ArticleVersionRecord, String> {
        let source = match self.source {
            Some(s) if !s.trim().is_empty() => s,
            _ => return Err(format!("line {line}: missing field `source`")),
        };
        let (article_id, mut url) = match self.a_id {
            Some(RawArticleId::Int(n)) if n >= 0 => (n, self.url),
            Some(RawArticleId::Int(n)) => {
                return Err(format!("line {line}: negative a_id {n}"));
            }
            Some(RawArticleId::Str(s)) => match s.trim().parse::<i64>() {
                Ok(n) if n >= 0 => (n, self.url),
                _ => {
                    // URL-style id: hash to 63 bits, keep the original around.
                    let url = if self.url.is_empty() { s.clone() } else { self.url };
                    (id_hash63(&s), url)
                }
            },
            None => return Err(format!("line {line}: missing field `a_id`")),
        };
        let version_id = match self.version_id {
            Some(v) => v,
            None => return Err(format!("line {line}: missing field `version_id`")),
        };
        let text = match self.text {
            Some(t) if !t.trim().is_empty() => t,
            Some(_) => return Err(format!("line {line}: empty `text`")),
            None => return Err(format!("line {line}: missing field `text`")),
        };
        let created = match self.created.as_deref().map(parse_timestamp) {
            Some(Ok(ts)) => ts,
            Some(Err(e)) => return Err(format!("line {line}: bad `created`: {e}")),
            None => return Err(format!("line {line}: missing field `created`")),
        };
        if url.is_empty() {
            url = String::new();
        }
        Ok(ArticleVersionRecord {
            source,
            article_id,
            version_id,
            title: self.title,
            url,
            archive_url: self.archive_url,
            text,
            created,
            num_versions: self.num_versions.unwrap_or(0),
        })
    }
}

/// ISO-8601 with zone designator; a bare trailing `Z` is accepted.
pub fn parse_timestamp(s: &str) -> std::result::Result<DateTime<FixedOffset>, String> {
    DateTime::parse_from_rfc3339(s.trim()).map_err(|e| e.to_string())
}

/// Streaming corpus reader.
///
/// Yields validated records; malformed records are logged with their line
/// number, counted in [`CorpusReader::rejected`] and skipped. Only transport
/// errors (unreadable stream, broken CSV framing) surface as `Err`.
pub struct CorpusReader<R: Read> {
    inner: ReaderKind<R>,
    rejected: u64,
}

enum ReaderKind<R: Read> {
    Jsonl { lines: std::io::Lines<BufReader<R>>, line_no: u64 },
    Csv { records: csv::StringRecordsIntoIter<R>, headers: csv::StringRecord },
}

impl<R: Read> CorpusReader<R> {
    pub fn new(reader: R, format: CorpusFormat) -> Result<CorpusReader<R>> {
        let inner = match format {
            CorpusFormat::Jsonl => ReaderKind::Jsonl {
                lines: BufReader::new(reader).lines(),
                line_no: 0,
            },
            CorpusFormat::Csv => {
                let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
                let headers = r.headers().map_err(csv_io)?.clone();
                ReaderKind::Csv {
                    records: r.into_records(),
                    headers,
                }
            }
        };
        Ok(CorpusReader { inner, rejected: 0 })
    }

    /// Count of malformed records skipped so far.
    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    fn reject(&mut self, reason: &str) {
        self.rejected += 1;
        warn!("ingest: rejected record: {reason}");
    }
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("csv: {other:?}"),
        )),
    }
}

impl<R: Read> Iterator for CorpusReader<R> {
    type Item = Result<ArticleVersionRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let parsed: std::result::Result<ArticleVersionRecord, String> = match &mut self.inner {
                ReaderKind::Jsonl { lines, line_no } => {
                    let line = match lines.next()? {
                        Ok(l) => l,
                        Err(e) => return Some(Err(Error::Io(e))),
                    };
                    *line_no += 1;
                    let no = *line_no;
                    if line.trim().is_empty() {
                        continue;
                    }
                    serde_json::from_str::<RawRecord>(&line)
                        .map_err(|e| format!("line {no}: invalid json: {e}"))
                        .and_then(|raw| raw.validate(no))
                }
                ReaderKind::Csv { records, headers } => {
                    let record = match records.next()? {
                        Ok(r) => r,
                        Err(e) => {
                            if e.is_io_error() {
                                return Some(Err(csv_io(e)));
                            }
                            let line = e.position().map(|p| p.line()).unwrap_or(0);
                            self.reject(&format!("line {line}: bad csv record: {e}"));
                            continue;
                        }
                    };
                    let line = record.position().map(|p| p.line()).unwrap_or(0);
                    csv_to_raw(headers, &record).and_then(|raw| raw.validate(line))
                }
            };
            match parsed {
                Ok(rec) => return Some(Ok(rec)),
                Err(reason) => {
                    self.reject(&reason);
                    continue;
                }
            }
        }
    }
}

fn csv_to_raw(
    headers: &csv::StringRecord,
    record: &csv::StringRecord,
) -> std::result::Result<RawRecord, String> {
    let field = |name: &str| -> Option<String> {
        headers
            .iter()
            .position(|h| h == name)
            .and_then(|i| record.get(i))
            .map(str::to_owned)
    };
    let line = record.position().map(|p| p.line()).unwrap_or(0);
    Ok(RawRecord {
        source: field("source"),
        a_id: field("a_id").map(RawArticleId::Str),
        version_id: match field("version_id") {
            Some(v) => Some(
                v.trim()
                    .parse::<u32>()
                    .map_err(|_| format!("line {line}: bad version_id {v:?}"))?,
            ),
            None => None,
        },
        title: field("title").unwrap_or_default(),
        url: field("url").unwrap_or_default(),
        archive_url: field("archive_url").unwrap_or_default(),
        text: field("text"),
        created: field("created"),
        num_versions: field("num_versions").and_then(|v| v.trim().parse().ok()),
    })
}

/// Group records by (source, article_id) into sorted, deduplicated histories.
///
/// Within each group, versions sort by `created` with ties broken by the
/// original `version_id`; consecutive byte-identical texts collapse to one
/// record; version ids are renumbered densely 1..n and `num_versions` is set
/// to the final group size. Two records sharing a (source, article, version)
/// key with different texts are a fatal consistency error.
pub fn group_versions<I>(records: I) -> Result<Vec<ArticleHistory>>
where
    I: IntoIterator<Item = ArticleVersionRecord>,
{
    let mut groups: BTreeMap<(String, i64), Vec<ArticleVersionRecord>> = BTreeMap::new();
    for rec in records {
        groups
            .entry((rec.source.clone(), rec.article_id))
            .or_default()
            .push(rec);
    }

    let mut histories = Vec::with_capacity(groups.len());
    for ((source, article_id), mut versions) in groups {
        // Exact duplicates by key collapse; same key with different text aborts.
        versions.sort_by(|a, b| (a.version_id, a.created).cmp(&(b.version_id, b.created)));
        versions.dedup_by(|b, a| {
            a.version_id == b.version_id && a.text == b.text && a.created == b.created
        });
        for w in versions.windows(2) {
            if w[0].version_id == w[1].version_id && w[0].text != w[1].text {
                return Err(Error::DuplicateVersionKey {
                    outlet: source,
                    article_id,
                    version_id: w[0].version_id,
                });
            }
        }

        versions.sort_by(|a, b| (a.created, a.version_id).cmp(&(b.created, b.version_id)));
        versions.dedup_by(|b, a| a.text == b.text);

        let n = versions.len() as u32;
        for (i, v) in versions.iter_mut().enumerate() {
            v.version_id = i as u32 + 1;
            v.num_versions = n;
        }
        histories.push(ArticleHistory {
            source,
            article_id,
            versions,
        });
    }
    Ok(histories)
}

/// Adjacent version pairs of one history, in order: (1,2), (2,3), ...
pub fn adjacent_pairs(history: &ArticleHistory) -> impl Iterator<Item = VersionPair<'_>> {
    history.versions.windows(2).map(|w| VersionPair {
        v_old: &w[0],
        v_new: &w[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(source: &str, a: i64, v: u32, text: &str, created: &str) -> ArticleVersionRecord {
        ArticleVersionRecord {
            source: source.into(),
            article_id: a,
            version_id: v,
            title: String::new(),
            url: String::new(),
            archive_url: String::new(),
            text: text.into(),
            created: parse_timestamp(created).unwrap(),
            num_versions: 0,
        }
    }

    fn jsonl_reader(data: &str) -> CorpusReader<&[u8]> {
        CorpusReader::new(data.as_bytes(), CorpusFormat::Jsonl).unwrap()
    }

    #[test]
    fn identity_parse_keeps_all_fields() {
        let line = concat!(
            r#"{"source":"bbc","a_id":7,"version_id":2,"title":"T","url":"u","#,
            r#""archive_url":"au","text":"Body text.","created":"2020-01-02T03:04:05+00:00","#,
            r#""num_versions":3}"#,
            "\n"
        );
        let mut r = jsonl_reader(line);
        let rec = r.next().unwrap().unwrap();
        assert_eq!(rec.source, "bbc");
        assert_eq!(rec.article_id, 7);
        assert_eq!(rec.version_id, 2);
        assert_eq!(rec.title, "T");
        assert_eq!(rec.url, "u");
        assert_eq!(rec.archive_url, "au");
        assert_eq!(rec.text, "Body text.");
        assert_eq!(rec.created_iso(), "2020-01-02T03:04:05+00:00");
        assert_eq!(rec.num_versions, 3);
        assert_eq!(r.rejected(), 0);
    }

    #[test]
    fn empty_text_is_rejected_and_counted() {
        let line = r#"{"source":"bbc","a_id":1,"version_id":1,"text":"  ","created":"2020-01-01T00:00:00Z"}"#;
        let mut r = jsonl_reader(line);
        assert!(r.next().is_none());
        assert_eq!(r.rejected(), 1);
    }

    #[test]
    fn malformed_lines_are_skipped_not_fatal() {
        let mut data = String::new();
        for i in 0..100 {
            if i == 10 {
                data.push_str("{not json}\n");
            } else if i == 20 {
                data.push_str(r#"{"source":"s","a_id":1,"version_id":1}"#);
                data.push('\n');
            } else if i == 30 {
                data.push_str(
                    r#"{"source":"s","a_id":1,"version_id":1,"text":"x","created":"not a date"}"#,
                );
                data.push('\n');
            } else {
                data.push_str(&format!(
                    r#"{{"source":"s","a_id":{i},"version_id":1,"text":"t","created":"2020-01-01T00:00:00Z"}}"#,
                ));
                data.push('\n');
            }
        }
        let mut r = jsonl_reader(&data);
        let ok: Vec<_> = r.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(ok.len(), 97);
        assert_eq!(r.rejected(), 3);
    }

    #[test]
    fn url_article_ids_hash_to_63_bits() {
        let line = r#"{"source":"s","a_id":"https://ex.com/story","version_id":1,"text":"t","created":"2020-01-01T00:00:00Z"}"#;
        let rec = jsonl_reader(line).next().unwrap().unwrap();
        assert!(rec.article_id >= 0);
        assert_eq!(rec.url, "https://ex.com/story");
    }

    #[test]
    fn csv_round() {
        let data = "source,a_id,version_id,title,url,archive_url,text,created\n\
                    bbc,5,1,T,u,au,\"Hello, world.\",2020-06-01T00:00:00Z\n";
        let mut r = CorpusReader::new(data.as_bytes(), CorpusFormat::Csv).unwrap();
        let rec = r.next().unwrap().unwrap();
        assert_eq!(rec.article_id, 5);
        assert_eq!(rec.text, "Hello, world.");
    }

    #[test]
    fn grouping_sorts_and_renumbers() {
        let records = vec![
            rec("s", 1, 30, "c", "2020-01-03T00:00:00Z"),
            rec("s", 1, 10, "a", "2020-01-01T00:00:00Z"),
            rec("s", 1, 20, "b", "2020-01-02T00:00:00Z"),
        ];
        let hist = group_versions(records).unwrap();
        assert_eq!(hist.len(), 1);
        let ids: Vec<u32> = hist[0].versions.iter().map(|v| v.version_id).collect();
        let texts: Vec<&str> = hist[0].versions.iter().map(|v| v.text.as_str()).collect();
        assert_eq!(ids, [1, 2, 3]);
        assert_eq!(texts, ["a", "b", "c"]);
        assert!(hist[0].versions.iter().all(|v| v.num_versions == 3));
    }

    #[test]
    fn consecutive_identical_texts_collapse() {
        let records = vec![
            rec("s", 1, 1, "same", "2020-01-01T00:00:00Z"),
            rec("s", 1, 2, "same", "2020-01-02T00:00:00Z"),
            rec("s", 1, 3, "diff", "2020-01-03T00:00:00Z"),
        ];
        let hist = group_versions(records).unwrap();
        assert_eq!(hist[0].versions.len(), 2);
        assert_eq!(hist[0].versions[0].text, "same");
        assert_eq!(hist[0].versions[1].text, "diff");
    }

    #[test]
    fn group_sizes_sum_to_record_count() {
        let mut records = Vec::new();
        let sizes = [(1i64, 4u32), (2, 3), (3, 2), (4, 1)];
        for &(a, n) in &sizes {
            for v in 1..=n {
                records.push(rec("s", a, v, &format!("t{a}{v}"), "2020-01-01T00:00:00Z"));
            }
        }
        let hist = group_versions(records).unwrap();
        assert_eq!(hist.len(), 4);
        let total: usize = hist.iter().map(|h| h.versions.len()).sum();
        assert_eq!(total, 10);
    }

    #[test]
    fn duplicate_key_with_different_text_is_fatal() {
        let records = vec![
            rec("s", 1, 1, "one", "2020-01-01T00:00:00Z"),
            rec("s", 1, 1, "two", "2020-01-02T00:00:00Z"),
        ];
        match group_versions(records) {
            Err(Error::DuplicateVersionKey {
                outlet,
                article_id,
                version_id,
            }) => {
                assert_eq!(outlet, "s");
                assert_eq!(article_id, 1);
                assert_eq!(version_id, 1);
            }
            other => panic!("expected DuplicateVersionKey, got {other:?}"),
        }
    }

    #[test]
    fn grouping_is_idempotent() {
        let records = vec![
            rec("s", 1, 9, "a", "2020-01-01T00:00:00Z"),
            rec("s", 1, 3, "b", "2020-01-02T00:00:00Z"),
            rec("t", 2, 1, "c", "2020-01-01T00:00:00Z"),
        ];
        let once = group_versions(records).unwrap();
        let flat: Vec<_> = once.iter().flat_map(|h| h.versions.clone()).collect();
        let twice = group_versions(flat).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn adjacent_pairs_enumeration() {
        let one = ArticleHistory {
            source: "s".into(),
            article_id: 1,
            versions: vec![rec("s", 1, 1, "a", "2020-01-01T00:00:00Z")],
        };
        assert_eq!(adjacent_pairs(&one).count(), 0);

        let records = (1..=5)
            .map(|v| rec("s", 2, v, &format!("t{v}"), "2020-01-01T00:00:00Z"))
            .collect::<Vec<_>>();
        let hist = &group_versions(records).unwrap()[0];
        let pairs: Vec<(u32, u32)> = adjacent_pairs(hist)
            .map(|p| (p.v_old.version_id, p.v_new.version_id))
            .collect();
        assert_eq!(pairs, [(1, 2), (2, 3), (3, 4), (4, 5)]);
    }
}
