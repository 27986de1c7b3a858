//! Deterministic text processing: sentence segmentation, word tokenization,
//! lemma lookup and the normalization behind Changed/Unchanged decisions.
//!
//! Everything here is rule-based and pure. The only state is the per-language
//! resources ([`LangData`]): an abbreviation list guarding the segmenter and a
//! lemma dictionary. Both ship embedded in the binary and can be overridden by
//! plain-text files in a data directory (`NEWSEDITS_DATA_DIR` or `--data-dir`).

mod lemma;
mod normalize;
mod segment;
mod token;

pub use lemma::LemmaDict;
pub use normalize::normalize_for_equality;
pub use segment::segment_sentences;
pub use token::tokenize;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Languages with bundled segmentation and lemma resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lang {
    En,
    Fr,
}

impl Lang {
    pub fn code(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Fr => "fr",
        }
    }

    pub fn parse(s: &str) -> Result<Lang> {
        match s {
            "en" => Ok(Lang::En),
            "fr" => Ok(Lang::Fr),
            other => Err(Error::InvalidConfig(format!(
                "unsupported language {other:?} (expected en or fr)"
            ))),
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One word or punctuation mark of a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    /// Byte offset of the surface within the sentence raw text.
    pub position: usize,
}

impl Token {
    /// Punctuation tokens carry no alphanumeric character.
    pub fn is_punctuation(&self) -> bool {
        !self.surface.chars().any(char::is_alphanumeric)
    }
}

/// The ordered tokens of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence(pub Vec<Token>);

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.0.iter().map(|t| t.surface.as_str()).collect()
    }
}

impl std::ops::Deref for TokenSequence {
    type Target = [Token];

    fn deref(&self) -> &[Token] {
        &self.0
    }
}

/// One sentence of one article version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    /// 1-based position within the version.
    pub index: usize,
    /// The sentence text, trimmed, with internal whitespace runs collapsed.
    pub raw: String,
    pub tokens: TokenSequence,
}

/// Per-language resources: abbreviation list plus lemma dictionary.
///
/// Read-only after construction; safe to share across worker threads.
pub struct LangData {
    lang: Lang,
    abbreviations: HashSet<String>,
    lemmas: LemmaDict,
}

const ABBREV_EN: &str = include_str!("../../data/abbreviations_en.txt");
const ABBREV_FR: &str = include_str!("../../data/abbreviations_fr.txt");
const LEMMAS_EN: &str = include_str!("../../data/lemmas_en.tsv");
const LEMMAS_FR: &str = include_str!("../../data/lemmas_fr.tsv");

fn parse_abbreviations(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

impl LangData {
    /// The embedded resources for `lang`.
    pub fn bundled(lang: Lang) -> LangData {
        let (abbrev, lemmas) = match lang {
            Lang::En => (ABBREV_EN, LEMMAS_EN),
            Lang::Fr => (ABBREV_FR, LEMMAS_FR),
        };
        LangData {
            lang,
            abbreviations: parse_abbreviations(abbrev),
            lemmas: LemmaDict::from_tsv(lemmas),
        }
    }

    /// Embedded resources, with any `abbreviations_<lang>.txt` or
    /// `lemmas_<lang>.tsv` found under `dir` taking precedence.
    pub fn with_overrides(lang: Lang, dir: &Path) -> Result<LangData> {
        let mut data = LangData::bundled(lang);
        let abbrev_path = dir.join(format!("abbreviations_{}.txt", lang.code()));
        if abbrev_path.is_file() {
            data.abbreviations = parse_abbreviations(&std::fs::read_to_string(&abbrev_path)?);
        }
        let lemma_path = dir.join(format!("lemmas_{}.tsv", lang.code()));
        if lemma_path.is_file() {
            data.lemmas = LemmaDict::from_tsv(&std::fs::read_to_string(&lemma_path)?);
        }
        Ok(data)
    }

    pub fn lang(&self) -> Lang {
        self.lang
    }

    pub fn abbreviations(&self) -> &HashSet<String> {
        &self.abbreviations
    }

    /// Dictionary lemma of a surface form, falling back to the case-folded
    /// surface for out-of-dictionary tokens.
    pub fn lemmatize(&self, surface: &str) -> String {
        self.lemmas.lemma(surface)
    }

    /// Segment, tokenize and lemmatize one article version.
    pub fn sentences(&self, text: &str) -> Vec<Sentence> {
        segment_sentences(text, &self.abbreviations)
            .into_iter()
            .enumerate()
            .map(|(i, raw)| {
                let tokens = tokenize(&raw)
                    .into_iter()
                    .map(|(surface, position)| {
                        let lemma = self.lemmatize(&surface);
                        Token {
                            surface,
                            lemma,
                            position,
                        }
                    })
                    .collect();
                Sentence {
                    index: i + 1,
                    raw,
                    tokens: TokenSequence(tokens),
                }
            })
            .collect()
    }
}
