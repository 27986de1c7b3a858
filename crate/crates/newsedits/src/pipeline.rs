//! End-to-end orchestration: ingest into the database, then diff all
//! adjacent version pairs into it.
//!
//! Diffing parallelizes over version pairs — each pair is a pure function of
//! its two sentence lists — while results are buffered and committed in
//! (source, article, version) key order, so any worker count produces the
//! same file.

use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use chrono::SecondsFormat;
use log::{info, warn};
use rayon::prelude::*;

use crate::diffgen::word::{extract_atomic_edits, word_diff, RowRef};
use crate::diffgen::{assign_tags, Change, DiffRow, PairKey, Tag};
use crate::error::{Error, Result};
use crate::hash::article_key;
use crate::ingest::{group_versions, ArticleVersionRecord, CorpusFormat, CorpusReader};
use crate::matcher::{
    match_versions, EmbeddingProvider, KernelKind, MatcherConfig, SideAddr,
};
use crate::store::{compute_summary, CorpusDb, PairDiff, WordDiffRow};
use crate::textproc::{Lang, LangData, Sentence, Token};

/// Environment variable pointing at override data files (abbreviation lists,
/// lemma dictionaries).
pub const DATA_DIR_ENV: &str = "NEWSEDITS_DATA_DIR";

/// Ingest stage outcome.
#[derive(Debug, Default, Clone, Copy)]
pub struct IngestReport {
    pub records: u64,
    pub rejected: u64,
    pub articles: u64,
    pub versions: u64,
    pub collapsed: u64,
}

/// Parse a corpus dump and build the articles table.
pub fn run_ingest(input: &Path, format: CorpusFormat, db_path: &Path) -> Result<IngestReport> {
    let file = File::open(input)?;
    let mut reader = CorpusReader::new(file, format)?;
    let mut records = Vec::new();
    for rec in reader.by_ref() {
        records.push(rec?);
    }
    let mut report = IngestReport {
        records: records.len() as u64,
        rejected: reader.rejected(),
        ..IngestReport::default()
    };

    let histories = group_versions(records)?;
    report.articles = histories.len() as u64;
    let flattened: Vec<ArticleVersionRecord> = histories
        .into_iter()
        .flat_map(|h| h.versions)
        .collect();
    report.versions = flattened.len() as u64;
    report.collapsed = report.records - report.versions;

    let mut db = CorpusDb::open(db_path)?;
    db.insert_articles(&flattened)?;
    info!(
        "ingest: {} records -> {} articles / {} versions ({} rejected, {} collapsed)",
        report.records, report.articles, report.versions, report.rejected, report.collapsed
    );
    Ok(report)
}

/// Configuration of one diff run.
#[derive(Debug, Clone)]
pub struct DiffConfig {
    pub kernel: KernelKind,
    pub threshold: f64,
    /// Worker count; 0 means one worker.
    pub jobs: usize,
    pub default_lang: Lang,
    /// Per-source language overrides.
    pub source_langs: HashMap<String, Lang>,
    pub embeddings: Option<PathBuf>,
    /// Recorded run timestamp; pin it for reproducible files.
    pub run_stamp: Option<String>,
    /// Version pairs per write transaction.
    pub batch_pairs: usize,
    /// Override directory for abbreviation/lemma data files.
    pub data_dir: Option<PathBuf>,
}

impl DiffConfig {
    pub fn new(kernel: KernelKind, threshold: f64) -> Result<DiffConfig> {
        MatcherConfig::new(kernel, threshold)?;
        Ok(DiffConfig {
            kernel,
            threshold,
            jobs: 1,
            default_lang: Lang::En,
            source_langs: HashMap::new(),
            embeddings: None,
            run_stamp: None,
            batch_pairs: 500,
            data_dir: None,
        })
    }

    fn lang_for(&self, source: &str) -> Lang {
        self.source_langs
            .get(source)
            .copied()
            .unwrap_or(self.default_lang)
    }
}

/// Diff stage outcome.
#[derive(Debug, Default, Clone, Copy)]
pub struct DiffReport {
    pub pairs: u64,
    pub skipped_pairs: u64,
    pub sentence_rows: u64,
    pub atomic_edits: u64,
    pub embedding_fallbacks: u64,
    pub elapsed_secs: f64,
}

/// Language resources for a run, loaded once and shared read-only.
fn load_lang_data(cfg: &DiffConfig, langs: &[Lang]) -> Result<HashMap<Lang, Arc<LangData>>> {
    let dir = cfg
        .data_dir
        .clone()
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from));
    let mut out = HashMap::new();
    for &lang in langs {
        let data = match &dir {
            Some(dir) => LangData::with_overrides(lang, dir)?,
            None => LangData::bundled(lang),
        };
        out.insert(lang, Arc::new(data));
    }
    Ok(out)
}

/// Diff every adjacent version pair of the articles stored in `db_path`.
///
/// Previous diff output in the database is replaced. Results are committed
/// in key order regardless of worker scheduling.
pub fn run_diff(db_path: &Path, cfg: &DiffConfig) -> Result<DiffReport> {
    let started = Instant::now();
    let matcher_cfg = MatcherConfig::new(cfg.kernel, cfg.threshold)?;
    let provider = match (&cfg.embeddings, cfg.kernel) {
        (Some(path), _) => Some(EmbeddingProvider::load(path)?),
        (None, KernelKind::Embedding) => {
            return Err(Error::InvalidConfig(
                "embedding kernel requires --embeddings".into(),
            ))
        }
        (None, KernelKind::Lexical) => None,
    };

    let mut db = CorpusDb::open(db_path)?;
    let histories = group_versions(db.read_articles()?)?;

    let mut langs: Vec<Lang> = histories
        .iter()
        .map(|h| cfg.lang_for(&h.source))
        .collect::<std::collections::HashSet<_>>()
        .into_iter()
        .collect();
    langs.sort_by_key(|l| l.code());
    if langs.is_empty() {
        langs.push(cfg.default_lang);
    }
    let lang_data = load_lang_data(cfg, &langs)?;

    // Segment each version once; pairs share their endpoints.
    struct PairTask {
        key: PairKey,
        old: Arc<Vec<Sentence>>,
        new: Arc<Vec<Sentence>>,
    }
    let mut tasks: Vec<PairTask> = Vec::new();
    for history in &histories {
        let data = &lang_data[&cfg.lang_for(&history.source)];
        let segmented: Vec<Arc<Vec<Sentence>>> = history
            .versions
            .par_iter()
            .map(|v| Arc::new(data.sentences(&v.text)))
            .collect();
        for (i, w) in history.versions.windows(2).enumerate() {
            tasks.push(PairTask {
                key: PairKey {
                    source: history.source.clone(),
                    article_id: history.article_id,
                    v_old_id: w[0].version_id,
                    v_new_id: w[1].version_id,
                },
                old: segmented[i].clone(),
                new: segmented[i + 1].clone(),
            });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let provider_ref = provider.as_ref();
    let results: Vec<Result<(PairDiff, u64)>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|task| diff_pair(&task.key, &task.old, &task.new, &matcher_cfg, provider_ref))
            .collect()
    });

    let mut report = DiffReport::default();
    let mut pair_diffs = Vec::with_capacity(results.len());
    for (task, result) in tasks.iter().zip(results) {
        match result {
            Ok((pair, fallbacks)) => {
                report.embedding_fallbacks += fallbacks;
                report.atomic_edits += pair
                    .word_rows
                    .iter()
                    .filter(|w| w.direction != "none")
                    .count() as u64;
                pair_diffs.push(pair);
            }
            Err(e) => {
                warn!("diff: pair {} skipped: {e}", task.key);
                report.skipped_pairs += 1;
            }
        }
    }

    db.clear_diffs()?;
    let write = db.write_pairs(&pair_diffs, cfg.batch_pairs)?;
    report.pairs = write.pairs;
    report.sentence_rows = write.sentence_rows;

    let stamp = cfg.run_stamp.clone().unwrap_or_else(|| {
        chrono::Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
    });
    let mut meta = vec![
        ("tool_version", env!("CARGO_PKG_VERSION").to_string()),
        ("kernel", cfg.kernel.name().to_string()),
        ("threshold", format!("{}", cfg.threshold)),
        ("default_lang", cfg.default_lang.code().to_string()),
        ("created_at", stamp),
    ];
    if let Some(path) = &cfg.embeddings {
        meta.push(("embeddings", path.display().to_string()));
    }
    if !cfg.source_langs.is_empty() {
        let mut overrides: Vec<String> = cfg
            .source_langs
            .iter()
            .map(|(s, l)| format!("{s}={l}"))
            .collect();
        overrides.sort();
        meta.push(("source_langs", overrides.join(",")));
    }
    db.set_run_meta(&meta)?;

    report.elapsed_secs = started.elapsed().as_secs_f64();
    info!(
        "diff: {} pairs ({} skipped), {} rows, {} atomic edits in {:.2}s",
        report.pairs, report.skipped_pairs, report.sentence_rows, report.atomic_edits, report.elapsed_secs
    );
    Ok(report)
}

/// Diff one version pair: match, tag, word-diff, summarize.
pub fn diff_pair(
    key: &PairKey,
    old: &[Sentence],
    new: &[Sentence],
    matcher_cfg: &MatcherConfig,
    provider: Option<&EmbeddingProvider>,
) -> Result<(PairDiff, u64)> {
    let akey = article_key(&key.source, key.article_id);
    let outcome = match_versions(
        old,
        new,
        matcher_cfg,
        provider,
        SideAddr {
            article: akey,
            version: key.v_old_id,
        },
        SideAddr {
            article: akey,
            version: key.v_new_id,
        },
    )?;
    let rows = assign_tags(key, old, new, &outcome.fwd, &outcome.rev)?;
    let word_rows = word_rows_for_pair(key, old, new, &rows)?;
    let summary = compute_summary(&rows, &word_rows)?;
    Ok((
        PairDiff {
            rows,
            word_rows,
            summary,
        },
        outcome.embedding_fallbacks,
    ))
}

/// Word-level rows for every old-side matched sentence of a pair.
///
/// Changed matches get one row per atomic edit against the concatenation of
/// their counterparts; unchanged matches keep a zero-op marker so every M
/// row has a word-level entry.
fn word_rows_for_pair(
    key: &PairKey,
    old: &[Sentence],
    new: &[Sentence],
    rows: &[DiffRow],
) -> Result<Vec<WordDiffRow>> {
    let mut out = Vec::new();
    for row in rows {
        let Some(Tag::Matched { indices, change }) = row.tag_old() else {
            continue;
        };
        let row_ref = RowRef {
            key: key.clone(),
            sentence_id: row.sentence_id,
        };
        if *change == Change::Unchanged {
            out.push(WordDiffRow::marker(row_ref));
            continue;
        }
        let old_tokens: &[Token] = &old[row.sentence_id as usize - 1].tokens;
        let counterpart: Vec<Token> = concat_tokens(indices, new);
        let ops = word_diff(old_tokens, &counterpart);
        let edits = extract_atomic_edits(old_tokens, &counterpart, &ops, &row_ref);
        if edits.is_empty() {
            // Change flag fired on normalization-visible differences only
            // (spacing, casing of punctuation runs); keep the marker row.
            out.push(WordDiffRow::marker(row_ref));
            continue;
        }
        out.extend(
            edits
                .iter()
                .enumerate()
                .map(|(i, e)| WordDiffRow::from_edit(e, i as u32 + 1)),
        );
    }
    Ok(out)
}

/// Tokens of the counterpart sentences in index order, re-based as one
/// sequence.
fn concat_tokens(indices: &[u32], sentences: &[Sentence]) -> Vec<Token> {
    let mut out = Vec::new();
    let mut offset = 0usize;
    for &j in indices {
        let s = &sentences[j as usize - 1];
        for t in s.tokens.iter() {
            out.push(Token {
                surface: t.surface.clone(),
                lemma: t.lemma.clone(),
                position: offset + t.position,
            });
        }
        // Separator width of the single space used when joining raws.
        offset += s.raw.len() + 1;
    }
    out
}
