//! Command-line interface.
//!
//! One executable, pipeline-shaped subcommands: `ingest` builds the articles
//! table, `diff` computes and stores all sentence/word diffs, `export` runs
//! the canonical dataset queries, `render` writes a side-by-side HTML view,
//! `validate` re-checks every stored invariant and `stats` prints corpus
//! totals. Exit codes: 0 success, 1 pipeline fault or validation failure,
//! 2 usage error.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::diffgen::PairKey;
use crate::error::{Error, Result};
use crate::exports::{run_export, ExportFormat, Filters, UseCase};
use crate::ingest::{parse_timestamp, CorpusFormat};
use crate::matcher::KernelKind;
use crate::pipeline::{run_diff, run_ingest, DiffConfig};
use crate::store::{validate_db, CorpusDb, SCHEMA_DDL};
use crate::textproc::{Lang, LangData};

#[derive(Parser)]
#[command(
    name = "newsedits",
    version,
    about = "Sentence- and word-level diffs over news article revision histories"
)]
struct Cli {
    /// Print the database schema DDL and exit.
    #[arg(long, global = true)]
    print_schema: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a corpus dump into the articles table.
    Ingest(IngestArgs),
    /// Diff all adjacent version pairs into the database.
    Diff(DiffArgs),
    /// Export one of the four canonical dataset views.
    Export(ExportArgs),
    /// Render one version pair as a standalone HTML page.
    Render(RenderArgs),
    /// Check every stored invariant; nonzero exit on any violation.
    Validate(ValidateArgs),
    /// Print corpus totals.
    Stats(StatsArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Input dump: one record per article version.
    #[arg(long)]
    input: PathBuf,
    /// Input serialization.
    #[arg(long, default_value = "jsonl", value_parser = CorpusFormat::parse)]
    format: CorpusFormat,
    /// Output database path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiffArgs {
    /// Database produced by `ingest`.
    #[arg(long)]
    db: PathBuf,
    /// Word-similarity kernel.
    #[arg(long, default_value = "lexical", value_parser = KernelKind::parse)]
    kernel: KernelKind,
    /// Match threshold T in [0, 1]; defaults per kernel (lexical 0.5,
    /// embedding 0.65).
    #[arg(long, value_parser = parse_threshold)]
    threshold: Option<f64>,
    /// Precomputed token-embedding file (binary or JSONL).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Worker count for pair processing; output is independent of it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Default language for segmentation and lemmas.
    #[arg(long, default_value = "en", value_parser = Lang::parse)]
    lang: Lang,
    /// Per-source language override, SOURCE=LANG; repeatable.
    #[arg(long = "source-lang", value_name = "SOURCE=LANG")]
    source_langs: Vec<String>,
    /// Directory with override data files (abbreviation lists, lemma
    /// dictionaries); NEWSEDITS_DATA_DIR works too.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Pin the recorded run timestamp (ISO-8601) for reproducible files.
    #[arg(long)]
    run_stamp: Option<String>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    db: PathBuf,
    /// 1 atomic edits, 2 refactorings, 3 addition modeling, 4 removal
    /// modeling.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    use_case: u8,
    #[arg(long, default_value = "jsonl", value_parser = ExportFormat::parse)]
    format: ExportFormat,
    /// Output file; "-" writes to stdout.
    #[arg(long)]
    out: PathBuf,
    /// Keep only these sources (comma-separated).
    #[arg(long, value_delimiter = ',')]
    sources: Vec<String>,
    /// Keep pairs whose new version was created at/after this ISO-8601 time.
    #[arg(long)]
    date_from: Option<String>,
    /// Keep pairs whose new version was created at/before this ISO-8601 time.
    #[arg(long)]
    date_to: Option<String>,
    /// Bounds on cached per-pair sentence counts.
    #[arg(long)]
    min_added: Option<u32>,
    #[arg(long)]
    max_added: Option<u32>,
    #[arg(long)]
    min_removed: Option<u32>,
    #[arg(long)]
    max_removed: Option<u32>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    source: String,
    /// Article id.
    #[arg(long)]
    article: i64,
    /// Old version id K of the pair (K, K+1).
    #[arg(long)]
    pair: u32,
    /// Output HTML file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "en", value_parser = Lang::parse)]
    lang: Lang,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    db: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    db: PathBuf,
}

fn parse_threshold(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("threshold must lie in [0, 1], got {v}"))
    }
}

/// Parse argv and run. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 0 for --help/--version, 2 for usage errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.print_schema {
        println!("{SCHEMA_DDL}");
        return 0;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required; see --help");
        return 2;
    };
    match dispatch(command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Ingest(args) => {
            let report = run_ingest(&args.input, args.format, &args.out)?;
            println!(
                "ingested {} records: {} articles, {} versions, {} rejected, {} collapsed",
                report.records, report.articles, report.versions, report.rejected, report.collapsed
            );
            Ok(0)
        }
        Command::Diff(args) => {
            let threshold = args
                .threshold
                .unwrap_or_else(|| args.kernel.default_threshold());
            let mut cfg = DiffConfig::new(args.kernel, threshold)?;
            cfg.jobs = args.jobs;
            cfg.default_lang = args.lang;
            cfg.source_langs = parse_source_langs(&args.source_langs)?;
            cfg.embeddings = args.embeddings;
            cfg.data_dir = args.data_dir;
            cfg.run_stamp = args.run_stamp;
            let report = run_diff(&args.db, &cfg)?;
            println!(
                "diffed {} pairs ({} skipped): {} sentence rows, {} atomic edits, {:.2}s",
                report.pairs,
                report.skipped_pairs,
                report.sentence_rows,
                report.atomic_edits,
                report.elapsed_secs
            );
            if report.embedding_fallbacks > 0 {
                println!("embedding fallbacks: {}", report.embedding_fallbacks);
            }
            Ok(0)
        }
        Command::Export(args) => {
            let db = CorpusDb::open_readonly(&args.db)?;
            let use_case = UseCase::from_number(args.use_case)?;
            let filters = Filters {
                sources: if args.sources.is_empty() {
                    None
                } else {
                    Some(args.sources.clone())
                },
                date_from: parse_opt_date(&args.date_from)?,
                date_to: parse_opt_date(&args.date_to)?,
                min_added: args.min_added,
                max_added: args.max_added,
                min_removed: args.min_removed,
                max_removed: args.max_removed,
            };
            let count = if args.out.as_os_str() == "-" {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                run_export(&db, use_case, &filters, args.format, &mut lock)?
            } else {
                let mut out = BufWriter::new(File::create(&args.out)?);
                let count = run_export(&db, use_case, &filters, args.format, &mut out)?;
                out.flush()?;
                count
            };
            eprintln!("exported {count} records");
            Ok(0)
        }
        Command::Render(args) => {
            let db = CorpusDb::open_readonly(&args.db)?;
            let key = PairKey {
                source: args.source,
                article_id: args.article,
                v_old_id: args.pair,
                v_new_id: args.pair + 1,
            };
            let data = LangData::bundled(args.lang);
            let html = crate::exports::html::render_html(&db, &key, &data)?;
            std::fs::write(&args.out, html)?;
            println!("wrote {}", args.out.display());
            Ok(0)
        }
        Command::Validate(args) => {
            let report = validate_db(&args.db)?;
            if report.is_clean() {
                println!(
                    "ok: {} articles, {} pairs, 0 violations",
                    report.articles, report.pairs
                );
                Ok(0)
            } else {
                for v in &report.violations {
                    println!("violation: {v}");
                }
                println!("{} violations", report.violations.len());
                Ok(1)
            }
        }
        Command::Stats(args) => {
            let db = CorpusDb::open_readonly(&args.db)?;
            let s = db.corpus_stats()?;
            println!("articles:            {}", s.articles);
            println!("versions:            {}", s.versions);
            println!("version pairs:       {}", s.version_pairs);
            println!("sentences added:     {}", s.sentences_added);
            println!("sentences removed:   {}", s.sentences_removed);
            println!("sentences changed:   {}", s.sentences_changed);
            println!("sentences unchanged: {}", s.sentences_unchanged);
            println!("refactorings:        {}", s.refactorings);
            println!("atomic edits:        {}", s.atomic_edits);
            Ok(0)
        }
    }
}

fn parse_source_langs(specs: &[String]) -> Result<HashMap<String, Lang>> {
    let mut map = HashMap::new();
    for spec in specs {
        let Some((source, lang)) = spec.split_once('=') else {
            return Err(Error::InvalidConfig(format!(
                "--source-lang expects SOURCE=LANG, got {spec:?}"
            )));
        };
        map.insert(source.to_string(), Lang::parse(lang)?);
    }
    Ok(map)
}

fn parse_opt_date(
    value: &Option<String>,
) -> Result<Option<chrono::DateTime<chrono::FixedOffset>>> {
    match value {
        None => Ok(None),
        Some(s) => parse_timestamp(s)
            .map(Some)
            .map_err(|e| Error::InvalidConfig(format!("bad date {s:?}: {e}"))),
    }
}
