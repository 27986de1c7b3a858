//! Rule-based sentence segmentation.
//!
//! A sentence ends at `.`, `!` or `?` (plus any trailing closing quotes or
//! brackets) when the next non-whitespace character looks like a sentence
//! opener: an uppercase letter, a digit, or an opening quote/bracket. A
//! period does not end a sentence when the word before it is on the
//! abbreviation list. Blank lines are hard boundaries.

use std::collections::HashSet;

const TERMINATORS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', '\u{2019}', '\u{201d}', '\u{bb}', '\u{203a}', ')', ']'];
const OPENERS: &[char] = &[
    '"', '\'', '`', '\u{2018}', '\u{201c}', '\u{ab}', '\u{2039}', '(', '[',
];

/// Split body text into trimmed sentence strings with collapsed whitespace.
///
/// Deterministic for fixed input and abbreviation list. Joining the result
/// with single spaces reproduces the whitespace-collapsed input.
pub fn segment_sentences(text: &str, abbreviations: &HashSet<String>) -> Vec<String> {
    let mut sentences = Vec::new();
    for paragraph in split_paragraphs(text) {
        segment_paragraph(paragraph, abbreviations, &mut sentences);
    }
    sentences
}

/// Paragraphs are separated by lines that are empty after trimming.
fn split_paragraphs(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\n' {
            // Look ahead over whitespace for a second newline.
            let mut j = i + 1;
            let mut blank = false;
            while j < bytes.len() && (bytes[j] as char).is_whitespace() {
                if bytes[j] == b'\n' {
                    blank = true;
                }
                j += 1;
            }
            if blank {
                out.push(&text[start..i]);
                start = j;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out.into_iter().filter(|p| !p.trim().is_empty()).collect()
}

fn segment_paragraph(paragraph: &str, abbreviations: &HashSet<String>, out: &mut Vec<String>) {
    let chars: Vec<(usize, char)> = paragraph.char_indices().collect();
    let n = chars.len();
    let mut sentence_start = 0usize; // index into chars
    let mut i = 0usize;

    while i < n {
        let c = chars[i].1;
        if !TERMINATORS.contains(&c) {
            i += 1;
            continue;
        }
        // Consume the whole terminator run ("...", "?!").
        let mut end = i;
        while end + 1 < n && TERMINATORS.contains(&chars[end + 1].1) {
            end += 1;
        }
        let run_len = end - i + 1;
        // Trailing closing quotes/brackets belong to the sentence.
        while end + 1 < n && CLOSERS.contains(&chars[end + 1].1) {
            end += 1;
        }

        let boundary = if end + 1 >= n {
            true
        } else if !chars[end + 1].1.is_whitespace() {
            false
        } else {
            // First non-whitespace character after the gap.
            let mut k = end + 1;
            while k < n && chars[k].1.is_whitespace() {
                k += 1;
            }
            match chars.get(k) {
                None => true,
                Some(&(_, next)) => {
                    next.is_uppercase() || next.is_ascii_digit() || OPENERS.contains(&next)
                }
            }
        };

        let abbreviated =
            c == '.' && run_len == 1 && is_abbreviation(&chars, i, abbreviations);

        if boundary && !abbreviated {
            push_sentence(paragraph, &chars, sentence_start, end, out);
            i = end + 1;
            sentence_start = i;
        } else {
            i = end + 1;
        }
    }
    if sentence_start < n {
        push_sentence(paragraph, &chars, sentence_start, n - 1, out);
    }
}

/// The word ending at the period at `chars[dot]`, including internal periods
/// ("U.S.") and the final one, checked against the abbreviation list both
/// verbatim and case-folded.
fn is_abbreviation(chars: &[(usize, char)], dot: usize, abbreviations: &HashSet<String>) -> bool {
    let mut start = dot;
    while start > 0 {
        let prev = chars[start - 1].1;
        if prev.is_alphanumeric() || prev == '.' || prev == '-' || prev == '\u{2019}' || prev == '\''
        {
            start -= 1;
        } else {
            break;
        }
    }
    if start == dot {
        return false; // bare period, no word attached
    }
    let word: String = chars[start..=dot].iter().map(|&(_, c)| c).collect();
    abbreviations.contains(&word) || abbreviations.contains(&word.to_lowercase())
}

fn push_sentence(
    paragraph: &str,
    chars: &[(usize, char)],
    start: usize,
    end: usize,
    out: &mut Vec<String>,
) {
    let byte_start = chars[start].0;
    let byte_end = chars[end].0 + chars[end].1.len_utf8();
    let collapsed = collapse_whitespace(&paragraph[byte_start..byte_end]);
    if !collapsed.is_empty() {
        out.push(collapsed);
    }
}

/// Trim and collapse internal whitespace runs to single spaces.
pub(crate) fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_gap = false;
    for c in s.trim().chars() {
        if c.is_whitespace() {
            in_gap = true;
        } else {
            if in_gap && !out.is_empty() {
                out.push(' ');
            }
            in_gap = false;
            out.push(c);
        }
    }
    out
}
