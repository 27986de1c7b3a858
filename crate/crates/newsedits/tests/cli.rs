//! End-to-end checks of the command-line surface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_newsedits")
}

fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo_pairs.jsonl")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Ingest + diff the bundled demo fixture into `dir`, returning the db path.
fn demo_db(dir: &Path) -> PathBuf {
    let db = dir.join("demo.db");
    let fixture = fixture_path();
    let out = run(&[
        "ingest",
        "--input",
        fixture.to_str().unwrap(),
        "--format",
        "jsonl",
        "--out",
        db.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "ingest failed: {out:?}");
    let out = run(&[
        "diff",
        "--db",
        db.to_str().unwrap(),
        "--kernel",
        "lexical",
        "--threshold",
        "0.5",
        "--run-stamp",
        "2026-01-01T00:00:00Z",
    ]);
    assert!(out.status.success(), "diff failed: {out:?}");
    db
}

#[test]
fn diff_then_stats_on_demo_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let db = demo_db(dir.path());
    let out = run(&["stats", "--db", db.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    for expect in [
        "articles:            3",
        "versions:            6",
        "version pairs:       3",
        "sentences added:     1",
        "sentences removed:   0",
        "sentences changed:   3",
        "sentences unchanged: 2",
        "refactorings:        2",
        "atomic edits:        12",
    ] {
        assert!(text.contains(expect), "stats output missing {expect:?}:\n{text}");
    }
}

#[test]
fn validate_on_fresh_output_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let db = demo_db(dir.path());
    let out = run(&["validate", "--db", db.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("0 violations"));
}

#[test]
fn validate_flags_corruption_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let db = demo_db(dir.path());
    let conn = rusqlite::Connection::open(&db).unwrap();
    conn.execute(
        "UPDATE sentence_diffs SET TAG_OLD = 'M C' WHERE TAG_OLD = 'M 1 C'",
        [],
    )
    .unwrap();
    drop(conn);
    let out = run(&["validate", "--db", db.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("violates grammar"));
}

#[test]
fn out_of_range_threshold_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("x.db");
    let out = run(&[
        "diff",
        "--db",
        db.to_str().unwrap(),
        "--threshold",
        "1.01",
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["stats", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn print_schema_emits_all_tables() {
    let out = run(&["--print-schema"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for table in [
        "articles",
        "sentence_diffs",
        "word_diffs",
        "sentence_diff_stats",
        "word_diff_stats",
        "run_meta",
    ] {
        assert!(text.contains(&format!("CREATE TABLE IF NOT EXISTS {table}")), "{table}");
    }
}

#[test]
fn csv_ingest_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("in.csv");
    std::fs::write(
        &csv_path,
        "source,a_id,version_id,title,url,archive_url,text,created\n\
         wire,1,1,T,u,,\"First take. It stands.\",2021-03-01T08:00:00Z\n\
         wire,1,2,T,u,,\"First take, revised. It stands.\",2021-03-01T09:00:00Z\n",
    )
    .unwrap();
    let db = dir.path().join("csv.db");
    let out = run(&[
        "ingest",
        "--input",
        csv_path.to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        db.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("2 versions"));
    let out = run(&["diff", "--db", db.to_str().unwrap()]);
    assert!(out.status.success());
    let out = run(&["validate", "--db", db.to_str().unwrap()]);
    assert!(out.status.success());
}

#[test]
fn export_writes_all_use_cases() {
    let dir = tempfile::tempdir().unwrap();
    let db = demo_db(dir.path());
    for (use_case, expect_lines) in [("1", 2), ("2", 2), ("3", 5), ("4", 6)] {
        for format in ["jsonl", "tsv"] {
            let out_path = dir.path().join(format!("uc{use_case}.{format}"));
            let out = run(&[
                "export",
                "--db",
                db.to_str().unwrap(),
                "--use-case",
                use_case,
                "--format",
                format,
                "--out",
                out_path.to_str().unwrap(),
            ]);
            assert!(out.status.success(), "use case {use_case} {format}: {out:?}");
            let content = std::fs::read_to_string(&out_path).unwrap();
            let data_lines = content
                .lines()
                .filter(|l| !l.is_empty())
                .count()
                - usize::from(format == "tsv"); // header row
            assert_eq!(
                data_lines, expect_lines,
                "use case {use_case} {format}:\n{content}"
            );
        }
    }
}

#[test]
fn export_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let db = demo_db(dir.path());
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for path in [&a, &b] {
        let out = run(&[
            "export",
            "--db",
            db.to_str().unwrap(),
            "--use-case",
            "1",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn export_source_filter_excludes_everything_else() {
    let dir = tempfile::tempdir().unwrap();
    let db = demo_db(dir.path());
    let out_path = dir.path().join("none.jsonl");
    let out = run(&[
        "export",
        "--db",
        db.to_str().unwrap(),
        "--use-case",
        "3",
        "--sources",
        "not-a-source",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&out_path).unwrap(), "");
}

#[test]
fn render_demo_pair_highlights_five_runs_per_side() {
    let dir = tempfile::tempdir().unwrap();
    let db = demo_db(dir.path());
    let html_path = dir.path().join("pair.html");
    let out = run(&[
        "render",
        "--db",
        db.to_str().unwrap(),
        "--source",
        "demo",
        "--article",
        "1",
        "--pair",
        "1",
        "--out",
        html_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let html = std::fs::read_to_string(&html_path).unwrap();
    assert_eq!(html.matches("<span class=\"del\">").count(), 5);
    assert_eq!(html.matches("<span class=\"ins\">").count(), 5);
    assert!(html.contains("M 1 C"));
    assert!(!html.contains("<script"));
}

#[test]
fn render_added_sentence_is_right_column_only() {
    let dir = tempfile::tempdir().unwrap();
    let db = demo_db(dir.path());
    let html_path = dir.path().join("pair3.html");
    let out = run(&[
        "render",
        "--db",
        db.to_str().unwrap(),
        "--source",
        "demo",
        "--article",
        "3",
        "--pair",
        "1",
        "--out",
        html_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let html = std::fs::read_to_string(&html_path).unwrap();
    // Row 3: empty old cell, populated new cell tagged A.
    assert!(html.contains("<td class=\"old\"></td><td class=\"new only\">"));
    // Unchanged rows carry no inline highlights.
    assert_eq!(html.matches("<span class=\"del\">").count(), 0);
}

#[test]
fn render_missing_pair_is_keyed_error() {
    let dir = tempfile::tempdir().unwrap();
    let db = demo_db(dir.path());
    let out = run(&[
        "render",
        "--db",
        db.to_str().unwrap(),
        "--source",
        "demo",
        "--article",
        "99",
        "--pair",
        "1",
        "--out",
        dir.path().join("x.html").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
}

#[test]
fn data_dir_override_changes_segmentation() {
    let dir = tempfile::tempdir().unwrap();
    // Override abbreviations with an empty list: "Mr." now ends a sentence.
    let data_dir = dir.path().join("data");
    std::fs::create_dir(&data_dir).unwrap();
    std::fs::write(data_dir.join("abbreviations_en.txt"), "# none\n").unwrap();

    let dump = dir.path().join("one.jsonl");
    std::fs::write(
        &dump,
        r#"{"source":"s","a_id":1,"version_id":1,"text":"Mr. Weidmann spoke. He left.","created":"2020-01-01T00:00:00Z"}
{"source":"s","a_id":1,"version_id":2,"text":"Mr. Weidmann spoke. He left now.","created":"2020-01-02T00:00:00Z"}
"#,
    )
    .unwrap();
    let db = dir.path().join("o.db");
    run(&[
        "ingest",
        "--input",
        dump.to_str().unwrap(),
        "--out",
        db.to_str().unwrap(),
    ]);
    let out = run(&[
        "diff",
        "--db",
        db.to_str().unwrap(),
        "--data-dir",
        data_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let conn = rusqlite::Connection::open(&db).unwrap();
    let rows: i64 = conn
        .query_row("SELECT COUNT(*) FROM sentence_diffs", [], |r| r.get(0))
        .unwrap();
    // Without the abbreviation guard both versions split into 3 sentences.
    assert_eq!(rows, 3);
}

#[test]
fn run_meta_records_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let db = demo_db(dir.path());
    let conn = rusqlite::Connection::open(&db).unwrap();
    let get = |k: &str| -> String {
        conn.query_row("SELECT VALUE FROM run_meta WHERE KEY = ?1", [k], |r| r.get(0))
            .unwrap()
    };
    assert_eq!(get("kernel"), "lexical");
    assert_eq!(get("threshold"), "0.5");
    assert_eq!(get("created_at"), "2026-01-01T00:00:00Z");
    assert!(!get("tool_version").is_empty());
}
