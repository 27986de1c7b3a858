//! Normalization behind the Changed/Unchanged flag.

use unicode_normalization::UnicodeNormalization;

/// Characters treated as quotation marks after the curly-to-ASCII mapping.
fn is_quote(c: char) -> bool {
    matches!(c, '"' | '\'' | '`')
}

/// Map curly quotes and apostrophes to their ASCII forms.
fn to_ascii_quote(c: char) -> char {
    match c {
        '\u{2018}' | '\u{2019}' | '\u{201a}' | '\u{201b}' => '\'',
        '\u{201c}' | '\u{201d}' | '\u{201e}' | '\u{201f}' => '"',
        '\u{ab}' | '\u{bb}' | '\u{2039}' | '\u{203a}' => '"',
        other => other,
    }
}

/// Canonical form used to decide whether two matched sentences differ.
///
/// Applies Unicode NFC, maps curly quotes/apostrophes to ASCII, deletes all
/// quotation-mark characters, collapses whitespace runs to single spaces and
/// trims. Idempotent.
pub fn normalize_for_equality(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut in_gap = false;
    let mut started = false;
    for c in raw.nfc().map(to_ascii_quote) {
        if is_quote(c) {
            continue;
        }
        if c.is_whitespace() {
            in_gap = true;
            continue;
        }
        if in_gap && started {
            out.push(' ');
        }
        in_gap = false;
        started = true;
        out.push(c);
    }
    out
}
