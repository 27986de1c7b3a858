//! Word tokenizer.
//!
//! A token is either a maximal run of alphanumeric characters — allowing
//! single internal hyphens or apostrophes between alphanumerics, so
//! "12-year-old" and "don't" stay whole — or a maximal run of one repeated
//! non-whitespace character ("''", "``", "...").

/// Characters that may join two alphanumeric runs into one word token.
fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '\u{2019}')
}

/// Split a sentence into (surface, byte offset) pairs.
///
/// Offsets are strictly increasing; every non-whitespace character of the
/// input lands in exactly one token.
pub fn tokenize(raw: &str) -> Vec<(String, usize)> {
    let chars: Vec<(usize, char)> = raw.char_indices().collect();
    let n = chars.len();
    let mut tokens = Vec::new();
    let mut i = 0;

    while i < n {
        let (offset, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let mut end = i;
            loop {
                let next = end + 1;
                if next < n && chars[next].1.is_alphanumeric() {
                    end = next;
                } else if next + 1 < n
                    && is_joiner(chars[next].1)
                    && chars[next + 1].1.is_alphanumeric()
                {
                    end = next + 1;
                } else {
                    break;
                }
            }
            tokens.push((slice(raw, &chars, i, end), offset));
            i = end + 1;
        } else {
            // Run of the same punctuation character.
            let mut end = i;
            while end + 1 < n && chars[end + 1].1 == c {
                end += 1;
            }
            tokens.push((slice(raw, &chars, i, end), offset));
            i = end + 1;
        }
    }
    tokens
}

fn slice(raw: &str, chars: &[(usize, char)], start: usize, end: usize) -> String {
    let b0 = chars[start].0;
    let b1 = chars[end].0 + chars[end].1.len_utf8();
    raw[b0..b1].to_string()
}
