//! Deterministic synthetic corpora.
//!
//! Generates article version histories with known, controllable edit
//! structure: word-level edit runs planted at a target rate, sentence
//! additions, removals, order swaps and splits. Used by the test suites to
//! exercise the pipeline at scale and by examples that need demo input.
//! Fixed seed, fixed output.

use chrono::{Duration, TimeZone, Utc};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::ingest::ArticleVersionRecord;
use crate::textproc::{Lang, LangData};

/// Knobs of one synthetic corpus.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub source: String,
    pub articles: usize,
    /// Versions per article; pairs per article is one less.
    pub versions: usize,
    pub sentences: (usize, usize),
    pub tokens: (usize, usize),
    pub vocab: usize,
    /// Per-sentence probability of planting word edits.
    pub p_change: f64,
    /// Per-sentence removal probability.
    pub p_remove: f64,
    /// Expected sentences added per new version (0, 1 or 2 slots).
    pub p_add: f64,
    /// Probability of one order swap per version step.
    pub p_swap: f64,
    /// Probability of one sentence split per version step.
    pub p_split: f64,
    /// Planted edit runs per changed sentence, uniform inclusive.
    pub edit_runs: (usize, usize),
}

impl SynthConfig {
    /// A mixed corpus exercising every edit kind.
    pub fn mixed(seed: u64, articles: usize, versions: usize) -> SynthConfig {
        SynthConfig {
            seed,
            source: "synth".into(),
            articles,
            versions,
            sentences: (6, 14),
            tokens: (20, 34),
            vocab: 4000,
            p_change: 0.30,
            p_remove: 0.08,
            p_add: 0.5,
            p_swap: 0.25,
            p_split: 0.15,
            edit_runs: (2, 6),
        }
    }

    /// Word edits only, at a fixed mean rate; no structural sentence ops.
    /// Keeps the planted-rate bookkeeping exact.
    pub fn density(seed: u64, articles: usize, versions: usize, runs: (usize, usize)) -> SynthConfig {
        SynthConfig {
            seed,
            source: "synth".into(),
            articles,
            versions,
            sentences: (8, 14),
            tokens: (24, 40),
            vocab: 4000,
            p_change: 0.5,
            p_remove: 0.0,
            p_add: 0.0,
            p_swap: 0.0,
            p_split: 0.0,
            edit_runs: runs,
        }
    }
}

/// What the generator actually planted.
#[derive(Debug, Default, Clone, Copy)]
pub struct PlantedStats {
    pub changed_sentences: u64,
    pub edit_runs: u64,
    pub added_sentences: u64,
    pub removed_sentences: u64,
}

impl PlantedStats {
    /// Mean planted edit runs per changed sentence.
    pub fn runs_per_changed(&self) -> f64 {
        if self.changed_sentences == 0 {
            0.0
        } else {
            self.edit_runs as f64 / self.changed_sentences as f64
        }
    }
}

/// A generated corpus plus its ground-truth edit counts.
#[derive(Debug)]
pub struct SynthCorpus {
    pub records: Vec<ArticleVersionRecord>,
    pub planted: PlantedStats,
}

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = build_vocab(cfg.vocab, &mut rng);
    let mut planted = PlantedStats::default();
    let mut records = Vec::with_capacity(cfg.articles * cfg.versions);
    let epoch = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();

    for article in 0..cfg.articles {
        let mut sentences: Vec<Vec<usize>> = (0..rng.gen_range(cfg.sentences.0..=cfg.sentences.1))
            .map(|_| random_sentence(cfg, &vocab, &mut rng))
            .collect();
        for version in 0..cfg.versions {
            if version > 0 {
                sentences = next_version(cfg, &vocab, sentences, &mut rng, &mut planted);
            }
            let created = epoch + Duration::hours((article * cfg.versions + version) as i64);
            records.push(ArticleVersionRecord {
                source: cfg.source.clone(),
                article_id: article as i64,
                version_id: version as u32 + 1,
                title: format!("Synthetic article {article}"),
                url: format!("synth://{article}"),
                archive_url: String::new(),
                text: render(&sentences, &vocab),
                created: created.fixed_offset(),
                num_versions: 0,
            });
        }
    }
    SynthCorpus { records, planted }
}

/// Capitalized pseudo-words, distinct case-insensitively, none colliding
/// with a bundled abbreviation.
fn build_vocab(size: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut banned: std::collections::HashSet<String> = std::collections::HashSet::new();
    for lang in [Lang::En, Lang::Fr] {
        for a in LangData::bundled(lang).abbreviations() {
            banned.insert(a.trim_end_matches('.').to_lowercase());
        }
    }
    let mut seen = std::collections::HashSet::new();
    let mut vocab = Vec::with_capacity(size);
    while vocab.len() < size {
        let len = rng.gen_range(4..=8);
        let mut word = String::with_capacity(len);
        for i in 0..len {
            let c = (b'a' + rng.gen_range(0..26u8)) as char;
            if i == 0 {
                word.extend(c.to_uppercase());
            } else {
                word.push(c);
            }
        }
        let folded = word.to_lowercase();
        if banned.contains(&folded) || !seen.insert(folded) {
            continue;
        }
        vocab.push(word);
    }
    vocab
}

fn random_sentence(cfg: &SynthConfig, vocab: &[String], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let len = rng.gen_range(cfg.tokens.0..=cfg.tokens.1);
    (0..len).map(|_| rng.gen_range(0..vocab.len())).collect()
}

fn render(sentences: &[Vec<usize>], vocab: &[String]) -> String {
    sentences
        .iter()
        .map(|s| {
            let words: Vec<&str> = s.iter().map(|&w| vocab[w].as_str()).collect();
            format!("{}.", words.join(" "))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn next_version(
    cfg: &SynthConfig,
    vocab: &[String],
    mut sentences: Vec<Vec<usize>>,
    rng: &mut ChaCha8Rng,
    planted: &mut PlantedStats,
) -> Vec<Vec<usize>> {
    // Order swap first so later per-sentence ops apply to the moved layout.
    if sentences.len() >= 2 && rng.gen_bool(cfg.p_swap) {
        let i = rng.gen_range(0..sentences.len());
        let mut j = rng.gen_range(0..sentences.len());
        while j == i {
            j = rng.gen_range(0..sentences.len());
        }
        sentences.swap(i, j);
    }

    let mut next: Vec<Vec<usize>> = Vec::with_capacity(sentences.len() + 2);
    for sentence in sentences {
        // The first surviving sentence is immune so a version never empties.
        if !next.is_empty() && rng.gen_bool(cfg.p_remove) {
            planted.removed_sentences += 1;
            continue;
        }
        if rng.gen_bool(cfg.p_change) {
            let (edited, runs) = plant_edits(cfg, vocab, &sentence, rng);
            if runs > 0 {
                planted.changed_sentences += 1;
                planted.edit_runs += runs;
            }
            next.push(edited);
        } else {
            next.push(sentence);
        }
    }
    if next.is_empty() {
        next.push(random_sentence(cfg, vocab, rng));
        planted.added_sentences += 1;
    }

    if cfg.p_split > 0.0 && rng.gen_bool(cfg.p_split) {
        let candidates: Vec<usize> = next
            .iter()
            .enumerate()
            .filter(|(_, s)| s.len() >= 10)
            .map(|(i, _)| i)
            .collect();
        if let Some(&idx) = candidates.as_slice().choose(rng) {
            let sentence = next.remove(idx);
            let cut = rng.gen_range(4..=sentence.len() - 4);
            let (left, right) = sentence.split_at(cut);
            next.insert(idx, right.to_vec());
            next.insert(idx, left.to_vec());
        }
    }

    for _ in 0..2 {
        if rng.gen_bool(cfg.p_add / 2.0) {
            let pos = rng.gen_range(0..=next.len());
            next.insert(pos, random_sentence(cfg, vocab, rng));
            planted.added_sentences += 1;
        }
    }
    next
}

/// Plant `r` separated insert/delete runs in one sentence.
///
/// Anchors keep at least three positions apart so runs cannot merge, the
/// first and last tokens stay put, and deletions are budgeted to a third of
/// the sentence so the edited sentence still clears the match threshold in
/// both directions.
fn plant_edits(
    cfg: &SynthConfig,
    vocab: &[String],
    sentence: &[usize],
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, u64) {
    let len = sentence.len();
    let want = rng.gen_range(cfg.edit_runs.0..=cfg.edit_runs.1);

    let mut anchors: Vec<usize> = Vec::new();
    let mut candidates: Vec<usize> = (1..len.saturating_sub(2)).collect();
    candidates.shuffle(rng);
    for pos in candidates {
        if anchors.iter().all(|&a| a.abs_diff(pos) >= 3) {
            anchors.push(pos);
            if anchors.len() == want {
                break;
            }
        }
    }
    anchors.sort_unstable();

    let mut delete_budget = len / 3;
    let mut out = sentence.to_vec();
    let mut runs = 0u64;
    for &pos in anchors.iter().rev() {
        let run_len = rng.gen_range(1..=2usize);
        let avail = out.len().saturating_sub(pos + 1);
        let prefer_delete = rng.gen_bool(0.5);
        if prefer_delete && run_len <= delete_budget && run_len <= avail {
            out.drain(pos..pos + run_len);
            delete_budget -= run_len;
        } else {
            for k in 0..run_len {
                let mut w = rng.gen_range(0..vocab.len());
                // A planted word equal to its neighbors would vanish in the diff.
                while out.get(pos + k - 1) == Some(&w) || out.get(pos + k) == Some(&w) {
                    w = rng.gen_range(0..vocab.len());
                }
                out.insert(pos + k, w);
            }
        }
        runs += 1;
    }
    (out, runs)
}
