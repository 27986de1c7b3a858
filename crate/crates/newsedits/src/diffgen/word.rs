//! Word-level diffs of matched-changed sentence pairs, and the atomic edits
//! they decompose into.
//!
//! Alignment is recursive longest-contiguous-matching-block selection over
//! surface tokens: find the longest block common to both sequences, recurse
//! on the stretches to its left and right, and turn the unmatched stretches
//! into delete/insert runs. Block selection is deterministic: longest first,
//! ties broken by smallest old offset, then smallest new offset. Each maximal
//! delete or insert run is one atomic edit.

use std::collections::HashMap;
use std::ops::Range;

use crate::diffgen::PairKey;
use crate::error::{Error, Result};
use crate::textproc::Token;

/// Kind of one aligned span pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordOpKind {
    Equal,
    Delete,
    Insert,
}

/// One aligned span pair. Spans are token ranges; the absent side of a
/// delete/insert is an empty range marking the position in that sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordOp {
    pub kind: WordOpKind,
    pub old_span: Range<usize>,
    pub new_span: Range<usize>,
}

/// Direction of an atomic edit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditDirection {
    Insertion,
    Deletion,
}

impl EditDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            EditDirection::Insertion => "insertion",
            EditDirection::Deletion => "deletion",
        }
    }
}

/// Reference from an atomic edit back to its sentence-diff row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowRef {
    pub key: PairKey,
    pub sentence_id: u32,
}

/// One maximal contiguous run of inserted or deleted tokens.
///
/// The anchor is the token offset in the sequence that does *not* contain
/// the run: for a deletion, where the removed tokens would sit in the new
/// sequence; for an insertion, where the added tokens enter the old one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicEdit {
    pub direction: EditDirection,
    pub tokens: Vec<String>,
    pub anchor: u32,
    pub row_ref: RowRef,
}

/// A contiguous matching block: `size` tokens at `old_start`/`new_start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Block {
    old_start: usize,
    new_start: usize,
    size: usize,
}

/// Diff two token sequences on their surfaces.
///
/// The returned ops are ordered, their spans partition both sequences, and
/// equal spans are maximal. Within one gap, the delete run precedes the
/// insert run.
pub fn word_diff(old: &[Token], new: &[Token]) -> Vec<WordOp> {
    let blocks = matching_blocks(old, new);
    let mut ops = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    for b in blocks {
        if i < b.old_start {
            ops.push(WordOp {
                kind: WordOpKind::Delete,
                old_span: i..b.old_start,
                new_span: j..j,
            });
        }
        if j < b.new_start {
            ops.push(WordOp {
                kind: WordOpKind::Insert,
                old_span: b.old_start..b.old_start,
                new_span: j..b.new_start,
            });
        }
        if b.size > 0 {
            ops.push(WordOp {
                kind: WordOpKind::Equal,
                old_span: b.old_start..b.old_start + b.size,
                new_span: b.new_start..b.new_start + b.size,
            });
        }
        i = b.old_start + b.size;
        j = b.new_start + b.size;
    }
    if i < old.len() {
        ops.push(WordOp {
            kind: WordOpKind::Delete,
            old_span: i..old.len(),
            new_span: j..j,
        });
    }
    if j < new.len() {
        ops.push(WordOp {
            kind: WordOpKind::Insert,
            old_span: old.len()..old.len(),
            new_span: j..new.len(),
        });
    }
    ops
}

/// All matching blocks, ascending, adjacent blocks merged.
fn matching_blocks(old: &[Token], new: &[Token]) -> Vec<Block> {
    // Positions of each surface in `new`, ascending.
    let mut new_positions: HashMap<&str, Vec<usize>> = HashMap::new();
    for (j, t) in new.iter().enumerate() {
        new_positions.entry(t.surface.as_str()).or_default().push(j);
    }

    let mut blocks = Vec::new();
    let mut queue = vec![(0usize, old.len(), 0usize, new.len())];
    while let Some((alo, ahi, blo, bhi)) = queue.pop() {
        let b = longest_match(old, &new_positions, alo, ahi, blo, bhi);
        if b.size == 0 {
            continue;
        }
        if alo < b.old_start && blo < b.new_start {
            queue.push((alo, b.old_start, blo, b.new_start));
        }
        if b.old_start + b.size < ahi && b.new_start + b.size < bhi {
            queue.push((b.old_start + b.size, ahi, b.new_start + b.size, bhi));
        }
        blocks.push(b);
    }
    blocks.sort_by_key(|b| (b.old_start, b.new_start));

    // Merge blocks that touch on both sides so equal spans are maximal.
    let mut merged: Vec<Block> = Vec::with_capacity(blocks.len());
    for b in blocks {
        match merged.last_mut() {
            Some(last)
                if last.old_start + last.size == b.old_start
                    && last.new_start + last.size == b.new_start =>
            {
                last.size += b.size;
            }
            _ => merged.push(b),
        }
    }
    merged
}

/// Longest block common to old[alo..ahi] and new[blo..bhi].
///
/// Rolling run-length pass: `run_ending[j]` holds the length of the common
/// block ending at (i, j). A candidate replaces the best only when strictly
/// longer, and the scan order (old offsets ascending, new positions
/// ascending) makes the kept block the one starting earliest in old, then
/// earliest in new.
fn longest_match(
    old: &[Token],
    new_positions: &HashMap<&str, Vec<usize>>,
    alo: usize,
    ahi: usize,
    blo: usize,
    bhi: usize,
) -> Block {
    let mut best = Block {
        old_start: alo,
        new_start: blo,
        size: 0,
    };
    let mut run_ending: HashMap<usize, usize> = HashMap::new();
    for i in alo..ahi {
        let mut next_run: HashMap<usize, usize> = HashMap::new();
        if let Some(positions) = new_positions.get(old[i].surface.as_str()) {
            for &j in positions {
                if j < blo {
                    continue;
                }
                if j >= bhi {
                    break;
                }
                let k = if j > blo {
                    run_ending.get(&(j - 1)).copied().unwrap_or(0) + 1
                } else {
                    1
                };
                next_run.insert(j, k);
                if k > best.size {
                    best = Block {
                        old_start: i + 1 - k,
                        new_start: j + 1 - k,
                        size: k,
                    };
                }
            }
        }
        run_ending = next_run;
    }
    best
}

/// Replay ops against the old sequence, reconstructing the new surfaces.
///
/// Insert payloads resolve through `new`; equal spans copy the old side and
/// are checked against the new side. Any span that fails to partition either
/// sequence, or an equal span whose sides disagree, is a consistency fault.
pub fn apply_word_ops(old: &[Token], new: &[Token], ops: &[WordOp]) -> Result<Vec<String>> {
    let fault = |message: String| Error::Consistency {
        key: "word ops".into(),
        message,
    };
    let mut out = Vec::with_capacity(new.len());
    let (mut i, mut j) = (0usize, 0usize);
    for op in ops {
        match op.kind {
            WordOpKind::Equal => {
                if op.old_span.start != i || op.new_span.start != j {
                    return Err(fault(format!("equal op out of order at ({i}, {j})")));
                }
                if op.old_span.len() != op.new_span.len() {
                    return Err(fault("equal op with unequal span lengths".into()));
                }
                if op.old_span.end > old.len() || op.new_span.end > new.len() {
                    return Err(fault("equal op out of bounds".into()));
                }
                for (a, b) in old[op.old_span.clone()].iter().zip(&new[op.new_span.clone()]) {
                    if a.surface != b.surface {
                        return Err(fault(format!(
                            "equal op covers differing tokens {:?} vs {:?}",
                            a.surface, b.surface
                        )));
                    }
                    out.push(a.surface.clone());
                }
                i = op.old_span.end;
                j = op.new_span.end;
            }
            WordOpKind::Delete => {
                if op.old_span.start != i || !op.new_span.is_empty() || op.old_span.is_empty() {
                    return Err(fault(format!("delete op malformed at ({i}, {j})")));
                }
                if op.old_span.end > old.len() {
                    return Err(fault("delete op out of bounds".into()));
                }
                i = op.old_span.end;
            }
            WordOpKind::Insert => {
                if op.new_span.start != j || !op.old_span.is_empty() || op.new_span.is_empty() {
                    return Err(fault(format!("insert op malformed at ({i}, {j})")));
                }
                if op.new_span.end > new.len() {
                    return Err(fault("insert op out of bounds".into()));
                }
                for t in &new[op.new_span.clone()] {
                    out.push(t.surface.clone());
                }
                j = op.new_span.end;
            }
        }
    }
    if i != old.len() || j != new.len() {
        return Err(fault(format!(
            "ops cover {i}/{} old and {j}/{} new tokens",
            old.len(),
            new.len()
        )));
    }
    Ok(out)
}

/// One atomic edit per delete/insert op, anchored in the opposite sequence.
pub fn extract_atomic_edits(
    old: &[Token],
    new: &[Token],
    ops: &[WordOp],
    row_ref: &RowRef,
) -> Vec<AtomicEdit> {
    let mut edits = Vec::new();
    for op in ops {
        match op.kind {
            WordOpKind::Equal => {}
            WordOpKind::Delete => edits.push(AtomicEdit {
                direction: EditDirection::Deletion,
                tokens: old[op.old_span.clone()]
                    .iter()
                    .map(|t| t.surface.clone())
                    .collect(),
                anchor: op.new_span.start as u32,
                row_ref: row_ref.clone(),
            }),
            WordOpKind::Insert => edits.push(AtomicEdit {
                direction: EditDirection::Insertion,
                tokens: new[op.new_span.clone()]
                    .iter()
                    .map(|t| t.surface.clone())
                    .collect(),
                anchor: op.old_span.start as u32,
                row_ref: row_ref.clone(),
            }),
        }
    }
    edits
}
