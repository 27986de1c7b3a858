//! Static side-by-side HTML rendering of one version pair.
//!
//! Two columns, one table row per diff row. Matched-changed rows get a
//! whole-cell background tint plus stronger inline highlights over deleted
//! (old side) and inserted (new side) token runs; added/removed sentences
//! render one-sided. Output is a self-contained document: inline styles, no
//! scripts.

use std::fmt::Write as _;

use crate::diffgen::word::{word_diff, WordOpKind};
use crate::diffgen::{Change, PairKey, Tag};
use crate::error::{Error, Result};
use crate::store::CorpusDb;
use crate::textproc::{LangData, Token};

const STYLE: &str = "\
body { font-family: Georgia, 'Times New Roman', serif; margin: 2rem auto; max-width: 70rem; color: #222; }
h1 { font-size: 1.2rem; font-weight: normal; }
table.diff { border-collapse: collapse; width: 100%; table-layout: fixed; }
table.diff th, table.diff td { border: 1px solid #ccc; padding: 0.5rem 0.7rem; vertical-align: top; }
table.diff th { background: #f2f2f2; font-weight: bold; }
td.idx, th.idx { width: 2.2rem; text-align: right; color: #666; }
td.tag, th.tag { width: 4.5rem; font-family: monospace; white-space: nowrap; }
td.old.changed { background: #fbe9eb; }
td.new.changed { background: #e9f7e9; }
td.old.only { background: #fbe9eb; }
td.new.only { background: #e9f7e9; }
span.del { background: #f2a9b4; }
span.ins { background: #a9e0a9; }
";

/// Render one stored version pair as a standalone HTML document.
pub fn render_html(db: &CorpusDb, key: &PairKey, lang_data: &LangData) -> Result<String> {
    let rows = db.read_pair_rows(key)?;
    if rows.is_empty() {
        return Err(Error::NotFound(format!("version pair {key}")));
    }

    let old_texts: Vec<&str> = rows
        .iter()
        .filter(|r| !r.tag_old.is_empty())
        .map(|r| r.sent_old.as_str())
        .collect();
    let new_texts: Vec<&str> = rows
        .iter()
        .filter(|r| !r.tag_new.is_empty())
        .map(|r| r.sent_new.as_str())
        .collect();

    let mut body = String::new();
    writeln!(
        body,
        "<h1>{} / article {} / version {} \u{2192} {}</h1>",
        escape(&key.source),
        key.article_id,
        key.v_old_id,
        key.v_new_id
    )
    .unwrap();
    body.push_str("<table class=\"diff\">\n");
    body.push_str(
        "<tr><th class=\"idx\">#</th><th class=\"tag\">Old tag</th><th>Old version</th>\
         <th>New version</th><th class=\"tag\">New tag</th></tr>\n",
    );

    for row in &rows {
        let tag_old = row.parsed_tag_old()?;
        let tag_new = row.parsed_tag_new()?;

        let old_cell = match &tag_old {
            None => (String::new(), ""),
            Some(Tag::Removed) => (escape(&row.sent_old), " only"),
            Some(Tag::Added) => unreachable!("old side never carries A"),
            Some(Tag::Matched { indices, change }) => match change {
                Change::Unchanged => (escape(&row.sent_old), ""),
                Change::Changed => {
                    let counterpart = join_indices(indices, &new_texts);
                    (
                        highlight(&row.sent_old, &counterpart, WordOpKind::Delete, lang_data),
                        " changed",
                    )
                }
            },
        };
        let new_cell = match &tag_new {
            None => (String::new(), ""),
            Some(Tag::Added) => (escape(&row.sent_new), " only"),
            Some(Tag::Removed) => unreachable!("new side never carries R"),
            Some(Tag::Matched { indices, change }) => match change {
                Change::Unchanged => (escape(&row.sent_new), ""),
                Change::Changed => {
                    let counterpart = join_indices(indices, &old_texts);
                    (
                        highlight(&row.sent_new, &counterpart, WordOpKind::Insert, lang_data),
                        " changed",
                    )
                }
            },
        };

        writeln!(
            body,
            "<tr><td class=\"idx\">{}</td><td class=\"tag\">{}</td>\
             <td class=\"old{}\">{}</td><td class=\"new{}\">{}</td><td class=\"tag\">{}</td></tr>",
            row.sentence_id,
            row.tag_old,
            old_cell.1,
            old_cell.0,
            new_cell.1,
            new_cell.0,
            row.tag_new,
        )
        .unwrap();
    }
    body.push_str("</table>\n");

    Ok(format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n\
         <title>{} {} {}-{}</title>\n<style>\n{}</style>\n</head>\n<body>\n{}</body>\n</html>\n",
        escape(&key.source),
        key.article_id,
        key.v_old_id,
        key.v_new_id,
        STYLE,
        body
    ))
}

fn join_indices(indices: &[u32], texts: &[&str]) -> String {
    indices
        .iter()
        .filter_map(|&j| texts.get(j as usize - 1).copied())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Escape a sentence and wrap its edited token runs in highlight spans.
///
/// The sentence is diffed against the concatenation of its counterparts;
/// deleted runs highlight on the old side, inserted runs on the new side.
/// Highlight ranges come from token byte offsets into the sentence text.
fn highlight(sentence: &str, counterpart: &str, side: WordOpKind, lang_data: &LangData) -> String {
    let own: Vec<Token> = tokens_of(sentence, lang_data);
    let other: Vec<Token> = tokens_of(counterpart, lang_data);
    let ops = match side {
        WordOpKind::Delete => word_diff(&own, &other),
        _ => word_diff(&other, &own),
    };

    // Byte ranges of this sentence's tokens covered by edit runs.
    let mut ranges: Vec<(usize, usize)> = Vec::new();
    for op in &ops {
        let span = match (side, op.kind) {
            (WordOpKind::Delete, WordOpKind::Delete) => op.old_span.clone(),
            (WordOpKind::Insert, WordOpKind::Insert) => op.new_span.clone(),
            _ => continue,
        };
        if span.is_empty() {
            continue;
        }
        let first = &own[span.start];
        let last = &own[span.end - 1];
        ranges.push((first.position, last.position + last.surface.len()));
    }

    let class = match side {
        WordOpKind::Delete => "del",
        _ => "ins",
    };
    let mut out = String::with_capacity(sentence.len() + ranges.len() * 24);
    let mut cursor = 0usize;
    for (start, end) in ranges {
        out.push_str(&escape(&sentence[cursor..start]));
        out.push_str(&format!("<span class=\"{class}\">"));
        out.push_str(&escape(&sentence[start..end]));
        out.push_str("</span>");
        cursor = end;
    }
    out.push_str(&escape(&sentence[cursor..]));
    out
}

fn tokens_of(text: &str, lang_data: &LangData) -> Vec<Token> {
    crate::textproc::tokenize(text)
        .into_iter()
        .map(|(surface, position)| Token {
            lemma: lang_data.lemmatize(&surface),
            surface,
            position,
        })
        .collect()
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}
