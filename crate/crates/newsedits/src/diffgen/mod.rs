//! Sentence-level diff rows and their tags.
//!
//! Every sentence of a version pair gets a three-part tag: whether it is
//! Matched, Added or Removed; for matches, the index or indices of its
//! counterpart(s) in the adjacent version; and whether the match is Changed
//! or Unchanged. Serialized forms are exactly `A`, `R`, or `M`, the ascending
//! indices and a `C`/`U` flag joined by single ASCII spaces: `M 1 2 C`.

pub mod word;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matcher::MatchMap;
use crate::textproc::{normalize_for_equality, Sentence};

/// Changed/Unchanged flag of a matched sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Change {
    Changed,
    Unchanged,
}

impl Change {
    pub fn flag(self) -> char {
        match self {
            Change::Changed => 'C',
            Change::Unchanged => 'U',
        }
    }
}

/// One sentence's tag relative to the adjacent version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tag {
    Added,
    Removed,
    Matched { indices: Vec<u32>, change: Change },
}

impl Tag {
    pub fn is_matched(&self) -> bool {
        matches!(self, Tag::Matched { .. })
    }

    pub fn matched_indices(&self) -> &[u32] {
        match self {
            Tag::Matched { indices, .. } => indices,
            _ => &[],
        }
    }

    pub fn change(&self) -> Option<Change> {
        match self {
            Tag::Matched { change, .. } => Some(*change),
            _ => None,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Added => f.write_str("A"),
            Tag::Removed => f.write_str("R"),
            Tag::Matched { indices, change } => {
                f.write_str("M")?;
                for i in indices {
                    write!(f, " {i}")?;
                }
                write!(f, " {}", change.flag())
            }
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Tag> {
        match s {
            "A" => return Ok(Tag::Added),
            "R" => return Ok(Tag::Removed),
            _ => {}
        }
        let bad = || Error::Domain(format!("invalid tag {s:?}"));
        let mut parts = s.split(' ');
        if parts.next() != Some("M") {
            return Err(bad());
        }
        let mut fields: Vec<&str> = parts.collect();
        let change = match fields.pop() {
            Some("C") => Change::Changed,
            Some("U") => Change::Unchanged,
            _ => return Err(bad()),
        };
        if fields.is_empty() {
            return Err(bad());
        }
        let mut indices = Vec::with_capacity(fields.len());
        for f in fields {
            // No leading zeros, no empty fields, strictly positive.
            if f.is_empty() || f.starts_with('0') {
                return Err(bad());
            }
            let n: u32 = f.parse().map_err(|_| bad())?;
            indices.push(n);
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad());
        }
        Ok(Tag::Matched { indices, change })
    }
}

/// Identity of one version pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairKey {
    pub source: String,
    pub article_id: i64,
    pub v_old_id: u32,
    pub v_new_id: u32,
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}->{})",
            self.source, self.article_id, self.v_old_id, self.v_new_id
        )
    }
}

/// One populated side of a diff row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowSide {
    pub text: String,
    pub tag: Tag,
}

/// One row of the sentence-level diff table.
///
/// Row `k` carries old sentence `k` (if the old version has one) and new
/// sentence `k` (if the new version has one), mirroring a side-by-side
/// layout; per pair there are `max(|old|, |new|)` rows. A side is either
/// fully present (text plus tag) or fully absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffRow {
    pub key: PairKey,
    /// 1-based row index.
    pub sentence_id: u32,
    pub old: Option<RowSide>,
    pub new: Option<RowSide>,
}

impl DiffRow {
    pub fn sent_old(&self) -> Option<&str> {
        self.old.as_ref().map(|s| s.text.as_str())
    }

    pub fn sent_new(&self) -> Option<&str> {
        self.new.as_ref().map(|s| s.text.as_str())
    }

    pub fn tag_old(&self) -> Option<&Tag> {
        self.old.as_ref().map(|s| &s.tag)
    }

    pub fn tag_new(&self) -> Option<&Tag> {
        self.new.as_ref().map(|s| &s.tag)
    }
}

/// Build the diff rows of a version pair from its directional match maps.
///
/// An old sentence's matched indices are the union of its forward target and
/// every new sentence mapping back to it (and symmetrically for new
/// sentences), so the cross-consistency invariant holds by construction. A
/// match is Unchanged exactly when the sentence's normalized text equals the
/// normalized concatenation of its counterparts in index order.
pub fn assign_tags(
    key: &PairKey,
    old: &[Sentence],
    new: &[Sentence],
    fwd: &MatchMap,
    rev: &MatchMap,
) -> Result<Vec<DiffRow>> {
    if fwd.len() != old.len() || rev.len() != new.len() {
        return Err(Error::Consistency {
            key: key.to_string(),
            message: format!(
                "match maps sized {}/{} for {}/{} sentences",
                fwd.len(),
                rev.len(),
                old.len(),
                new.len()
            ),
        });
    }
    let in_range = |v: usize, len: usize| v == 0 || v <= len;
    for i in 1..=old.len() {
        if !in_range(fwd.target(i), new.len()) {
            return Err(Error::Consistency {
                key: key.to_string(),
                message: format!("fwd[{i}] = {} out of range", fwd.target(i)),
            });
        }
    }
    for j in 1..=new.len() {
        if !in_range(rev.target(j), old.len()) {
            return Err(Error::Consistency {
                key: key.to_string(),
                message: format!("rev[{j}] = {} out of range", rev.target(j)),
            });
        }
    }

    let old_tags: Vec<Tag> = (1..=old.len())
        .map(|i| {
            let indices = counterparts(i, fwd, rev);
            match indices {
                ref idx if idx.is_empty() => Tag::Removed,
                indices => {
                    let change = change_flag(&old[i - 1], &indices, new);
                    Tag::Matched { indices, change }
                }
            }
        })
        .collect();
    let new_tags: Vec<Tag> = (1..=new.len())
        .map(|j| {
            let indices = counterparts(j, rev, fwd);
            if indices.is_empty() {
                Tag::Added
            } else {
                let change = change_flag(&new[j - 1], &indices, old);
                Tag::Matched { indices, change }
            }
        })
        .collect();

    let rows = (1..=old.len().max(new.len()))
        .map(|k| DiffRow {
            key: key.clone(),
            sentence_id: k as u32,
            old: old.get(k - 1).map(|s| RowSide {
                text: s.raw.clone(),
                tag: old_tags[k - 1].clone(),
            }),
            new: new.get(k - 1).map(|s| RowSide {
                text: s.raw.clone(),
                tag: new_tags[k - 1].clone(),
            }),
        })
        .collect();
    Ok(rows)
}

/// Union of this sentence's own map target and all reverse hits, ascending.
fn counterparts(i: usize, own: &MatchMap, other: &MatchMap) -> Vec<u32> {
    let mut indices: Vec<u32> = Vec::new();
    if let Some(j) = own.matched(i) {
        indices.push(j as u32);
    }
    for j in 1..=other.len() {
        if other.target(j) == i {
            indices.push(j as u32);
        }
    }
    indices.sort_unstable();
    indices.dedup();
    indices
}

fn change_flag(sentence: &Sentence, indices: &[u32], counterparts: &[Sentence]) -> Change {
    let joined = indices
        .iter()
        .map(|&j| counterparts[j as usize - 1].raw.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    if normalize_for_equality(&sentence.raw) == normalize_for_equality(&joined) {
        Change::Unchanged
    } else {
        Change::Changed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::{match_versions, MatcherConfig, SideAddr};
    use crate::textproc::{Lang, LangData};

    fn key() -> PairKey {
        PairKey {
            source: "s".into(),
            article_id: 1,
            v_old_id: 1,
            v_new_id: 2,
        }
    }

    fn diff(old_text: &str, new_text: &str) -> Vec<DiffRow> {
        let d = LangData::bundled(Lang::En);
        let old = d.sentences(old_text);
        let new = d.sentences(new_text);
        let out = match_versions(
            &old,
            &new,
            &MatcherConfig::lexical(),
            None,
            SideAddr::default(),
            SideAddr::default(),
        )
        .unwrap();
        assign_tags(&key(), &old, &new, &out.fwd, &out.rev).unwrap()
    }

    fn tag_strings(rows: &[DiffRow]) -> Vec<(String, String)> {
        rows.iter()
            .map(|r| {
                (
                    r.tag_old().map(Tag::to_string).unwrap_or_default(),
                    r.tag_new().map(Tag::to_string).unwrap_or_default(),
                )
            })
            .collect()
    }

    #[test]
    fn tag_serialization_matches_grammar() {
        assert_eq!(Tag::Added.to_string(), "A");
        assert_eq!(Tag::Removed.to_string(), "R");
        assert_eq!(
            Tag::Matched {
                indices: vec![1, 2],
                change: Change::Changed
            }
            .to_string(),
            "M 1 2 C"
        );
        assert_eq!(
            Tag::Matched {
                indices: vec![2],
                change: Change::Unchanged
            }
            .to_string(),
            "M 2 U"
        );
    }

    #[test]
    fn tag_parse_round_trip() {
        for s in ["A", "R", "M 1 C", "M 2 U", "M 1 2 C", "M 3 7 19 U"] {
            let tag: Tag = s.parse().unwrap();
            assert_eq!(tag.to_string(), s);
        }
    }

    #[test]
    fn tag_parse_rejects_malformed() {
        for s in ["", "M", "M C", "M 0 C", "M 1", "M 2 1 C", "M 1 1 U", "X 1 C", "M 1  C", "M 01 C"] {
            assert!(s.parse::<Tag>().is_err(), "accepted {s:?}");
        }
    }

    #[test]
    fn identical_versions_are_all_unchanged() {
        let text = "The vote passed today. The house adjourned.";
        let rows = diff(text, text);
        assert_eq!(
            tag_strings(&rows),
            vec![
                ("M 1 U".to_string(), "M 1 U".to_string()),
                ("M 2 U".to_string(), "M 2 U".to_string())
            ]
        );
    }

    #[test]
    fn empty_old_version_is_all_added() {
        let d = LangData::bundled(Lang::En);
        let new = d.sentences("One. Two here.");
        let rows = assign_tags(
            &key(),
            &[],
            &new,
            &MatchMap::empty(0),
            &MatchMap::empty(2),
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.old.is_none()));
        assert!(rows
            .iter()
            .all(|r| matches!(r.tag_new(), Some(Tag::Added))));
    }

    #[test]
    fn empty_new_version_is_all_removed() {
        let d = LangData::bundled(Lang::En);
        let old = d.sentences("One. Two here.");
        let rows = assign_tags(
            &key(),
            &old,
            &[],
            &MatchMap::empty(2),
            &MatchMap::empty(0),
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.new.is_none()));
        assert!(rows
            .iter()
            .all(|r| matches!(r.tag_old(), Some(Tag::Removed))));
    }

    #[test]
    fn row_count_is_max_side() {
        let rows = diff(
            "Quorak velim sorat. Minel dovar quen.",
            "Quorak velim sorat. Minel dovar quen. Parvel sodim nulor.",
        );
        assert_eq!(rows.len(), 3);
        assert!(rows[2].old.is_none());
        assert_eq!(rows[2].tag_new().unwrap().to_string(), "A");
    }

    #[test]
    fn cross_consistency_of_indices() {
        let rows = diff(
            "Barle moquin tessar davol. Hestia vornel calad. Urdin pellam sovat.",
            "Hestia vornel calad. Urdin pellam sovat tessar.",
        );
        let old_rows: Vec<&DiffRow> = rows.iter().filter(|r| r.old.is_some()).collect();
        let new_rows: Vec<&DiffRow> = rows.iter().filter(|r| r.new.is_some()).collect();
        for r in &old_rows {
            for &j in r.tag_old().unwrap().matched_indices() {
                let counter = new_rows[j as usize - 1].tag_new().unwrap();
                assert!(
                    counter.matched_indices().contains(&r.sentence_id),
                    "old {} -> new {j} not reciprocated",
                    r.sentence_id
                );
            }
        }
        for r in &new_rows {
            for &i in r.tag_new().unwrap().matched_indices() {
                let counter = old_rows[i as usize - 1].tag_old().unwrap();
                assert!(counter.matched_indices().contains(&r.sentence_id));
            }
        }
    }

    #[test]
    fn map_out_of_range_is_consistency_fault() {
        let d = LangData::bundled(Lang::En);
        let old = d.sentences("Only one here.");
        let new = d.sentences("Only one here.");
        // Target index 5 with only one new sentence.
        let bad = MatchMap::from_parts(vec![5], vec![0.9]);
        let err = assign_tags(&key(), &old, &new, &bad, &MatchMap::empty(1));
        assert!(matches!(err, Err(Error::Consistency { .. })));
    }
}
