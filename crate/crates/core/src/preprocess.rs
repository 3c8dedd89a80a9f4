//! Text normalization and corpus filters applied before alignment and
//! before evaluation.
//!
//! The quote set is fixed:
//!
//! | class  | characters                                   |
//! |--------|----------------------------------------------|
//! | double | `"` U+0022, `“` U+201C, `”` U+201D, `„` U+201E, `‟` U+201F, `«` U+00AB, `»` U+00BB |
//! | single | `'` U+0027, `‘` U+2018, `’` U+2019, `‚` U+201A, `‛` U+201B, `‹` U+2039, `›` U+203A |
//!
//! Stripping removes every character in the set, apostrophes included.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{nfc, LangCode, ParallelCorpus, Stage};

pub const DOUBLE_QUOTES: [char; 7] = ['"', '\u{201C}', '\u{201D}', '\u{201E}', '\u{201F}', '\u{00AB}', '\u{00BB}'];
pub const SINGLE_QUOTES: [char; 7] = ['\'', '\u{2018}', '\u{2019}', '\u{201A}', '\u{201B}', '\u{2039}', '\u{203A}'];

pub fn is_quote(c: char) -> bool {
    DOUBLE_QUOTES.contains(&c) || SINGLE_QUOTES.contains(&c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuoteMode {
    Standardize,
    Strip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuoteTargets {
    pub double: char,
    pub single: char,
}

impl Default for QuoteTargets {
    fn default() -> Self {
        QuoteTargets {
            double: '"',
            single: '\'',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuotePolicy {
    pub mode: QuoteMode,
    #[serde(default)]
    pub default_targets: QuoteTargets,
    #[serde(default)]
    pub per_language: BTreeMap<LangCode, QuoteTargets>,
}

impl Default for QuotePolicy {
    fn default() -> Self {
        QuotePolicy::standardize()
    }
}

impl QuotePolicy {
    pub fn standardize() -> Self {
        QuotePolicy {
            mode: QuoteMode::Standardize,
            default_targets: QuoteTargets::default(),
            per_language: BTreeMap::new(),
        }
    }

    pub fn strip() -> Self {
        QuotePolicy {
            mode: QuoteMode::Strip,
            ..QuotePolicy::standardize()
        }
    }

    pub fn with_language(mut self, lang: LangCode, targets: QuoteTargets) -> Self {
        self.per_language.insert(lang, targets);
        self
    }

    pub fn targets_for(&self, lang: &LangCode) -> QuoteTargets {
        self.per_language.get(lang).copied().unwrap_or(self.default_targets)
    }

    /// Applies the policy in its configured mode.
    pub fn apply(&self, text: &str, lang: &LangCode) -> String {
        match self.mode {
            QuoteMode::Standardize => standardize_quotes(text, lang, self),
            QuoteMode::Strip => strip_quotes(text),
        }
    }
}

/// Maps every quote-set character to the language's target double or single
/// quote. Other characters are untouched.
pub fn standardize_quotes(text: &str, lang: &LangCode, policy: &QuotePolicy) -> String {
    let targets = policy.targets_for(lang);
    text.chars()
        .map(|c| {
            if DOUBLE_QUOTES.contains(&c) {
                targets.double
            } else if SINGLE_QUOTES.contains(&c) {
                targets.single
            } else {
                c
            }
        })
        .collect()
}

pub fn strip_quotes(text: &str) -> String {
    text.chars().filter(|c| !is_quote(*c)).collect()
}

/// Number of maximal non-whitespace runs.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Keeps pairs whose source has at least `min_words` words.
pub fn filter_min_source_length(corpus: &ParallelCorpus, min_words: usize) -> ParallelCorpus {
    let pairs = corpus
        .pairs
        .iter()
        .filter(|p| word_count(&p.source.text) >= min_words)
        .cloned()
        .collect();
    corpus.with_pairs(pairs, Stage::Filtered)
}

fn dedup_key(text: &str) -> String {
    nfc(text.trim())
}

/// Drops repeated (source, target) pairs, keeping first occurrences.
/// Texts are compared after trimming and NFC normalization.
pub fn dedup(corpus: &ParallelCorpus) -> ParallelCorpus {
    let mut seen = HashSet::new();
    let pairs = corpus
        .pairs
        .iter()
        .filter(|p| seen.insert((dedup_key(&p.source.text), dedup_key(&p.target.text))))
        .cloned()
        .collect();
    corpus.with_pairs(pairs, Stage::Deduped)
}
