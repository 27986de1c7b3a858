//! Lookup-table lemmatizer.

use std::collections::{HashMap, HashSet};

/// Inflected-form to lemma dictionary with case-folded fallback.
///
/// Loaded from TAB-separated text: `inflected<TAB>lemma`, one pair per line,
/// `#` comments allowed. The table is post-processed so that no lemma is
/// itself a dictionary key, which makes `lemma` idempotent: entries whose key
/// collides with another entry's lemma are dropped ("found" stays "found"
/// rather than chaining through find).
pub struct LemmaDict {
    map: HashMap<String, String>,
}

impl LemmaDict {
    pub fn from_tsv(text: &str) -> LemmaDict {
        let mut map: HashMap<String, String> = HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(2, '\t');
            let (Some(inflected), Some(lemma)) = (parts.next(), parts.next()) else {
                continue;
            };
            let inflected = inflected.trim().to_lowercase();
            let lemma = lemma.trim().to_lowercase();
            if inflected.is_empty() || lemma.is_empty() || inflected == lemma {
                continue;
            }
            map.entry(inflected).or_insert(lemma);
        }
        let lemmas: HashSet<String> = map.values().cloned().collect();
        map.retain(|k, _| !lemmas.contains(k));
        LemmaDict { map }
    }

    /// Dictionary lemma, or the case-folded surface on a miss. Total.
    pub fn lemma(&self, surface: &str) -> String {
        let folded = surface.to_lowercase();
        match self.map.get(&folded) {
            Some(lemma) => lemma.clone(),
            None => folded,
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_and_fallback() {
        let d = LemmaDict::from_tsv("running\trun\nmice\tmouse\n");
        assert_eq!(d.lemma("running"), "run");
        assert_eq!(d.lemma("Mice"), "mouse");
        assert_eq!(d.lemma("Weidmann"), "weidmann");
    }

    #[test]
    fn chains_are_broken_for_idempotence() {
        // "found" is both an entry key (past of find) and the lemma of
        // "founds"; the key must lose.
        let d = LemmaDict::from_tsv("found\tfind\nfounds\tfound\n");
        assert_eq!(d.lemma("founds"), "found");
        assert_eq!(d.lemma("found"), "found");
        for (k, _) in d.entries() {
            let once = d.lemma(k);
            assert_eq!(d.lemma(&once), once);
        }
    }

    #[test]
    fn first_entry_wins_on_duplicate_keys() {
        let d = LemmaDict::from_tsv("suis\tsuivre\nsuis\têtre\n");
        assert_eq!(d.lemma("suis"), "suivre");
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let d = LemmaDict::from_tsv("# header\n\nate\teat\n");
        assert_eq!(d.len(), 1);
        assert_eq!(d.lemma("ate"), "eat");
    }
}
