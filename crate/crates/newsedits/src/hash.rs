//! Stable 64-bit hashing for identifiers.
//!
//! `std::hash` makes no cross-run guarantees, so identifiers that end up in
//! files (article ids derived from URLs, embedding record keys) go through
//! FNV-1a instead.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Hash a string identifier into the non-negative `i64` range (63 bits).
///
/// Used when an article id arrives as a URL rather than an integer.
pub fn id_hash63(s: &str) -> i64 {
    (fnv1a64(s.as_bytes()) & 0x7fff_ffff_ffff_ffff) as i64
}

/// Key identifying one article of one source in embedding files.
///
/// The unit separator keeps `("ab", 1)` and `("a", "b1")`-style collisions out.
pub fn article_key(source: &str, article_id: i64) -> u64 {
    let mut buf = Vec::with_capacity(source.len() + 21);
    buf.extend_from_slice(source.as_bytes());
    buf.push(0x1f);
    buf.extend_from_slice(article_id.to_string().as_bytes());
    fnv1a64(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_across_calls() {
        assert_eq!(fnv1a64(b"bbc"), fnv1a64(b"bbc"));
        assert_ne!(fnv1a64(b"bbc"), fnv1a64(b"cnn"));
    }

    #[test]
    fn id_hash_is_non_negative() {
        for s in ["", "x", "https://example.com/a?b=c", "émotion"] {
            assert!(id_hash63(s) >= 0, "negative hash for {s:?}");
        }
    }

    #[test]
    fn article_key_separates_fields() {
        assert_ne!(article_key("ab", 1), article_key("a", 11));
        assert_eq!(article_key("bbc", 42), article_key("bbc", 42));
    }
}
