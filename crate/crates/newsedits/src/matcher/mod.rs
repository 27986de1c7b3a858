//! Asymmetric sentence matching.
//!
//! The similarity of token sequence `x` against `y` is the mean over tokens
//! of `x` of each token's best kernel score in `y`:
//!
//! ```text
//! sim_asym(x, y) = (1/|x|) * sum_i max_j phi(x_i, y_j)
//! ```
//!
//! The measure is directional: a sentence fully contained in a longer one
//! scores 1.0 forward and less than 1.0 backward, which is what lets splits
//! and merges surface as many-to-one matches. [`match_versions`] evaluates
//! the full Cartesian product of sentences of a version pair and keeps, per
//! sentence, the argmax counterpart when its score clears the threshold.

mod embedding;

pub use embedding::{
    unit_vector, write_binary, write_jsonl, EmbeddingProvider, EmbeddingRecord, NEDV_MAGIC,
};

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::textproc::{normalize_for_equality, Sentence, Token};

/// Which word-similarity kernel drives the matcher.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// phi = 1 when lemmas are equal, 0 otherwise.
    Lexical,
    /// phi = dot product of precomputed unit token vectors, clamped to [0, 1];
    /// lookup misses fall back to the lexical score.
    Embedding,
}

impl KernelKind {
    pub fn parse(s: &str) -> Result<KernelKind> {
        match s {
            "lexical" => Ok(KernelKind::Lexical),
            "embedding" => Ok(KernelKind::Embedding),
            other => Err(Error::InvalidConfig(format!(
                "unknown kernel {other:?} (expected lexical or embedding)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Lexical => "lexical",
            KernelKind::Embedding => "embedding",
        }
    }

    /// Default match threshold for this kernel. Recorded in run metadata;
    /// override per run with `--threshold`.
    pub fn default_threshold(self) -> f64 {
        match self {
            KernelKind::Lexical => 0.5,
            KernelKind::Embedding => 0.65,
        }
    }
}

/// Matcher configuration: kernel choice plus match threshold T.
#[derive(Debug, Clone, Copy)]
pub struct MatcherConfig {
    pub kernel: KernelKind,
    pub threshold: f64,
}

impl MatcherConfig {
    pub fn new(kernel: KernelKind, threshold: f64) -> Result<MatcherConfig> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in [0, 1], got {threshold}"
            )));
        }
        Ok(MatcherConfig { kernel, threshold })
    }

    pub fn lexical() -> MatcherConfig {
        MatcherConfig {
            kernel: KernelKind::Lexical,
            threshold: KernelKind::Lexical.default_threshold(),
        }
    }
}

/// Address of one token for embedding lookups: article key, version id,
/// 1-based sentence index, 0-based token index within the sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TokenAddr {
    pub article: u64,
    pub version: u32,
    pub sentence: u32,
    pub token: u32,
}

/// Address of a whole version: article key plus version id.
#[derive(Debug, Clone, Copy, Default)]
pub struct SideAddr {
    pub article: u64,
    pub version: u32,
}

impl SideAddr {
    fn token_addr(&self, sentence: u32, token: u32) -> TokenAddr {
        TokenAddr {
            article: self.article,
            version: self.version,
            sentence,
            token,
        }
    }
}

/// Kernel instance used for one matching run.
#[derive(Clone, Copy)]
pub enum Kernel<'a> {
    Lexical,
    Embedding(&'a EmbeddingProvider),
}

impl Kernel<'_> {
    /// Word-level similarity in [0, 1].
    ///
    /// Embedding lookups that miss fall back to the lexical score for that
    /// token pair and bump `fallbacks`.
    pub fn phi(
        &self,
        x: &Token,
        x_addr: TokenAddr,
        y: &Token,
        y_addr: TokenAddr,
        fallbacks: &mut u64,
    ) -> f64 {
        match self {
            Kernel::Lexical => lexical_phi(x, y),
            Kernel::Embedding(provider) => {
                match (provider.get(&x_addr), provider.get(&y_addr)) {
                    (Some(vx), Some(vy)) => {
                        let dot: f64 = vx
                            .iter()
                            .zip(vy)
                            .map(|(a, b)| f64::from(*a) * f64::from(*b))
                            .sum();
                        dot.clamp(0.0, 1.0)
                    }
                    _ => {
                        *fallbacks += 1;
                        lexical_phi(x, y)
                    }
                }
            }
        }
    }
}

fn lexical_phi(x: &Token, y: &Token) -> f64 {
    if x.lemma == y.lemma {
        1.0
    } else {
        0.0
    }
}

/// One side of a similarity computation: tokens paired with their original
/// in-sentence indices, plus the sentence address for embedding lookups.
pub struct SimSide<'a> {
    pub tokens: Vec<(u32, &'a Token)>,
    pub article: u64,
    pub version: u32,
    pub sentence: u32,
}

impl<'a> SimSide<'a> {
    /// All tokens of a sequence, with a default (lexical-only) address.
    pub fn plain(tokens: &'a [Token]) -> SimSide<'a> {
        SimSide {
            tokens: tokens.iter().enumerate().map(|(i, t)| (i as u32, t)).collect(),
            article: 0,
            version: 0,
            sentence: 0,
        }
    }

    fn addr(&self, pos: usize) -> TokenAddr {
        TokenAddr {
            article: self.article,
            version: self.version,
            sentence: self.sentence,
            token: self.tokens[pos].0,
        }
    }
}

/// Directional similarity of `x` against `y`: mean best kernel score.
///
/// Errors when either side is empty.
pub fn sim_asym(kernel: &Kernel<'_>, x: &SimSide<'_>, y: &SimSide<'_>, fallbacks: &mut u64) -> Result<f64> {
    if x.tokens.is_empty() || y.tokens.is_empty() {
        return Err(Error::Domain(
            "sim_asym requires non-empty token sequences".into(),
        ));
    }
    let mut total = 0.0;
    for (xi, &(_, xt)) in x.tokens.iter().enumerate() {
        let mut best = 0.0f64;
        for (yi, &(_, yt)) in y.tokens.iter().enumerate() {
            let s = kernel.phi(xt, x.addr(xi), yt, y.addr(yi), fallbacks);
            if s > best {
                best = s;
            }
        }
        total += best;
    }
    Ok(total / x.tokens.len() as f64)
}

/// Lexical-kernel similarity over full token sequences.
pub fn sim_asym_lexical(x: &[Token], y: &[Token]) -> Result<f64> {
    sim_asym(
        &Kernel::Lexical,
        &SimSide::plain(x),
        &SimSide::plain(y),
        &mut 0,
    )
}

/// Directional sentence-index map: 1-based sentence index to matched 1-based
/// counterpart index, or 0 when the best score did not clear the threshold.
/// The best score is kept either way.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchMap {
    targets: Vec<u32>,
    scores: Vec<f64>,
}

impl MatchMap {
    pub fn empty(len: usize) -> MatchMap {
        MatchMap {
            targets: vec![0; len],
            scores: vec![0.0; len],
        }
    }

    /// Assemble a map from raw parts; mainly for tests and oracles.
    pub fn from_parts(targets: Vec<u32>, scores: Vec<f64>) -> MatchMap {
        assert_eq!(targets.len(), scores.len());
        MatchMap { targets, scores }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Matched counterpart of 1-based sentence `i`, 0 meaning unmatched.
    pub fn target(&self, i: usize) -> usize {
        self.targets[i - 1] as usize
    }

    /// Matched counterpart of sentence `i`, if any.
    pub fn matched(&self, i: usize) -> Option<usize> {
        match self.target(i) {
            0 => None,
            j => Some(j),
        }
    }

    /// Best similarity score seen for sentence `i`, thresholded or not.
    pub fn score(&self, i: usize) -> f64 {
        self.scores[i - 1]
    }

    fn set(&mut self, i: usize, target: usize, score: f64) {
        self.targets[i - 1] = target as u32;
        self.scores[i - 1] = score;
    }
}

/// Result of matching one version pair.
#[derive(Debug)]
pub struct MatchOutcome {
    /// old sentence index -> new sentence index.
    pub fwd: MatchMap,
    /// new sentence index -> old sentence index.
    pub rev: MatchMap,
    /// Embedding lookups that fell back to the lexical kernel.
    pub embedding_fallbacks: u64,
}

/// Per-sentence data prepared once per version so the pairwise loop shares it.
struct Prepared<'a> {
    content: Vec<(u32, &'a Token)>,
    lemma_set: HashSet<&'a str>,
    norm: String,
}

fn prepare(sentences: &[Sentence]) -> Vec<Prepared<'_>> {
    sentences
        .iter()
        .map(|s| {
            let content: Vec<(u32, &Token)> = s
                .tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| !t.is_punctuation())
                .map(|(i, t)| (i as u32, t))
                .collect();
            let lemma_set = content.iter().map(|(_, t)| t.lemma.as_str()).collect();
            Prepared {
                content,
                lemma_set,
                norm: normalize_for_equality(&s.raw),
            }
        })
        .collect()
}

/// Match the sentences of two adjacent versions in both directions.
///
/// Evaluates all |old| x |new| sentence pairs once, scoring both directions
/// from the same kernel pass. Punctuation tokens are excluded from the
/// kernel; sentences with no content tokens fall back to normalized surface
/// equality. Argmax ties break toward the smallest index; a sentence matches
/// only when its best score is strictly above the threshold.
pub fn match_versions(
    old: &[Sentence],
    new: &[Sentence],
    config: &MatcherConfig,
    provider: Option<&EmbeddingProvider>,
    old_addr: SideAddr,
    new_addr: SideAddr,
) -> Result<MatchOutcome> {
    let kernel = match config.kernel {
        KernelKind::Lexical => Kernel::Lexical,
        KernelKind::Embedding => Kernel::Embedding(provider.ok_or_else(|| {
            Error::InvalidConfig("embedding kernel requires an embedding file".into())
        })?),
    };

    let old_prep = prepare(old);
    let new_prep = prepare(new);
    let mut fallbacks = 0u64;

    // fwd_score[i][j] = sim(old_i -> new_j); rev_score[j][i] = sim(new_j -> old_i).
    let mut fwd_score = vec![vec![0.0f64; new.len()]; old.len()];
    let mut rev_score = vec![vec![0.0f64; old.len()]; new.len()];

    for (i, op) in old_prep.iter().enumerate() {
        for (j, np) in new_prep.iter().enumerate() {
            let (f, r) = if op.content.is_empty() || np.content.is_empty() {
                let eq = if op.norm == np.norm { 1.0 } else { 0.0 };
                (eq, eq)
            } else {
                match kernel {
                    Kernel::Lexical => {
                        let f = lemma_overlap(&op.content, &np.lemma_set);
                        let r = lemma_overlap(&np.content, &op.lemma_set);
                        (f, r)
                    }
                    Kernel::Embedding(_) => both_directions(
                        &kernel,
                        &op.content,
                        old_addr.token_addr(i as u32 + 1, 0),
                        &np.content,
                        new_addr.token_addr(j as u32 + 1, 0),
                        &mut fallbacks,
                    ),
                }
            };
            fwd_score[i][j] = f;
            rev_score[j][i] = r;
        }
    }

    let fwd = argmax_map(&fwd_score, config.threshold);
    let rev = argmax_map(&rev_score, config.threshold);
    Ok(MatchOutcome {
        fwd,
        rev,
        embedding_fallbacks: fallbacks,
    })
}

/// Mean membership of x lemmas in y's lemma set: equals the lexical
/// sim_asym because max over j of an indicator is set membership.
fn lemma_overlap(x: &[(u32, &Token)], y_set: &HashSet<&str>) -> f64 {
    let hits = x
        .iter()
        .filter(|(_, t)| y_set.contains(t.lemma.as_str()))
        .count();
    hits as f64 / x.len() as f64
}

/// One pass over the token matrix yielding both directional sims.
fn both_directions(
    kernel: &Kernel<'_>,
    x: &[(u32, &Token)],
    x_base: TokenAddr,
    y: &[(u32, &Token)],
    y_base: TokenAddr,
    fallbacks: &mut u64,
) -> (f64, f64) {
    let mut row_best = vec![0.0f64; x.len()];
    let mut col_best = vec![0.0f64; y.len()];
    for (xi, &(xorig, xt)) in x.iter().enumerate() {
        let xa = TokenAddr {
            token: xorig,
            ..x_base
        };
        for (yi, &(yorig, yt)) in y.iter().enumerate() {
            let ya = TokenAddr {
                token: yorig,
                ..y_base
            };
            let s = kernel.phi(xt, xa, yt, ya, fallbacks);
            if s > row_best[xi] {
                row_best[xi] = s;
            }
            if s > col_best[yi] {
                col_best[yi] = s;
            }
        }
    }
    let f = row_best.iter().sum::<f64>() / x.len() as f64;
    let r = col_best.iter().sum::<f64>() / y.len() as f64;
    (f, r)
}

/// Row-wise argmax with smallest-index tie-break and strict threshold.
fn argmax_map(scores: &[Vec<f64>], threshold: f64) -> MatchMap {
    let mut map = MatchMap::empty(scores.len());
    for (i, row) in scores.iter().enumerate() {
        let mut best = 0.0f64;
        let mut best_j = 0usize;
        for (j, &s) in row.iter().enumerate() {
            if s > best {
                best = s;
                best_j = j + 1;
            }
        }
        let target = if best > threshold { best_j } else { 0 };
        map.set(i + 1, target, best);
    }
    map
}
