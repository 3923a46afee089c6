//! Style metrics over description text: tokenization, length, lexical
//! entropy, type-token ratio, mean pairwise word-vector similarity, hedging
//! and rule-based sentiment.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use unicode_segmentation::UnicodeSegmentation;

use crate::corpus::{DescriptionRecord, GroupKey, KeyField};
use crate::embed::{dot, WordVectorTable};

pub mod sentiment;

pub use sentiment::{sentiment, ValenceLexicon};

/// Identifies the tokenizer in output metadata.
pub const TOKENIZER_ID: &str = "uax29-words-lower-hyphen-joined/v1";

/// The winsorization constant used unless overridden.
pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TextError {
    #[error("text has no tokens")]
    EmptyText,
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("epsilon must lie in (0, 0.5), got {0}")]
    BadEpsilon(f64),
    #[error("proportion must lie in [0, 1], got {0}")]
    BadProportion(f64),
    #[error("no sentiment lexicon loaded")]
    MissingLexicon,
}

/// Lowercased word tokens of one text with sentence boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedText {
    pub tokens: Vec<String>,
    /// Half-open token ranges; consecutive and covering every token.
    pub sentence_spans: Vec<(usize, usize)>,
}

impl TokenizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn is_word(segment: &str) -> bool {
    segment.chars().any(char::is_alphanumeric)
}

fn is_hyphen(segment: &str) -> bool {
    matches!(segment, "-" | "\u{2010}" | "\u{2011}")
}

fn ends_sentence(segment: &str) -> bool {
    segment.chars().any(|c| matches!(c, '.' | '!' | '?' | '\u{2026}'))
}

/// Unicode word segmentation, lowercased. Segments without a letter or
/// digit are dropped; `word-word` runs with no spaces stay one token.
/// Sentences end at segments carrying `.`, `!`, `?` or an ellipsis.
pub fn tokenize(text: &str) -> TokenizedText {
    let mut tokens: Vec<String> = Vec::new();
    let mut spans = Vec::new();
    let mut span_start = 0;
    let mut after_word = false;
    let mut pending_hyphen = false;

    for segment in text.split_word_bounds() {
        if is_word(segment) {
            let lower = segment.to_lowercase();
            match tokens.last_mut() {
                Some(last) if after_word && pending_hyphen => {
                    last.push('-');
                    last.push_str(&lower);
                }
                _ => tokens.push(lower),
            }
            after_word = true;
            pending_hyphen = false;
        } else if is_hyphen(segment) && after_word && !pending_hyphen {
            pending_hyphen = true;
        } else {
            after_word = false;
            pending_hyphen = false;
            if ends_sentence(segment) && tokens.len() > span_start {
                spans.push((span_start, tokens.len()));
                span_start = tokens.len();
            }
        }
    }
    if tokens.len() > span_start {
        spans.push((span_start, tokens.len()));
    }
    TokenizedText { tokens, sentence_spans: spans }
}

fn type_counts<S: AsRef<str>>(tokens: &[S]) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_ref()).or_insert(0usize) += 1;
    }
    counts
}

/// Shannon entropy of the token distribution, in bits.
pub fn lexical_entropy<S: AsRef<str>>(tokens: &[S]) -> Result<f64, TextError> {
    if tokens.is_empty() {
        return Err(TextError::EmptyText);
    }
    let n = tokens.len() as f64;
    let h = type_counts(tokens)
        .values()
        .map(|c| {
            let p = *c as f64 / n;
            -p * libm::log2(p)
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// Distinct types over total tokens.
pub fn type_token_ratio<S: AsRef<str>>(tokens: &[S]) -> Result<f64, TextError> {
    if tokens.is_empty() {
        return Err(TextError::EmptyText);
    }
    let types: BTreeSet<&str> = tokens.iter().map(AsRef::as_ref).collect();
    Ok(types.len() as f64 / tokens.len() as f64)
}

/// Mean cosine similarity over unordered pairs of token positions whose
/// token has a nonzero vector in `table`. `None` with fewer than two.
pub fn mean_pairwise_similarity<S: AsRef<str>>(tokens: &[S], table: &WordVectorTable) -> Option<f64> {
    let vectors: Vec<(&[f64], f64)> = tokens
        .iter()
        .filter_map(|t| table.get(t.as_ref()))
        .map(|v| (v, libm::sqrt(dot(v, v))))
        .filter(|(_, norm)| *norm > 0.0)
        .collect();
    let m = vectors.len();
    if m < 2 {
        return None;
    }
    let mut total = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            let (u, nu) = vectors[i];
            let (v, nv) = vectors[j];
            total += (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
        }
    }
    let pairs = (m * (m - 1) / 2) as f64;
    Some(total / pairs)
}

/// Hedge terms, each stored as its token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HedgeLexicon {
    terms: Vec<Vec<String>>,
}

impl HedgeLexicon {
    /// Terms are run through [`tokenize`]; multi-word terms match as
    /// contiguous token runs.
    pub fn new<I, S>(terms: I) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = BTreeSet::new();
        for term in terms {
            let tokens = tokenize(term.as_ref()).tokens;
            if !tokens.is_empty() {
                seen.insert(tokens);
            }
        }
        if seen.is_empty() {
            return Err(TextError::EmptyLexicon);
        }
        Ok(Self { terms: seen.into_iter().collect() })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &[String]> {
        self.terms.iter().map(Vec::as_slice)
    }

    /// True if any term occurs in `tokens`.
    pub fn matches<S: AsRef<str>>(&self, tokens: &[S]) -> bool {
        self.terms.iter().any(|term| {
            tokens.len() >= term.len()
                && tokens.windows(term.len()).any(|w| w.iter().zip(term).all(|(a, b)| a.as_ref() == b))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeRate {
    pub group: GroupKey,
    pub n: usize,
    pub hits: usize,
    pub proportion: f64,
}

/// Per-group share of descriptions containing at least one hedge term.
pub fn hedge_rate(records: &[DescriptionRecord], lexicon: &HedgeLexicon, group_by: &[KeyField]) -> Vec<HedgeRate> {
    let mut cells: BTreeMap<GroupKey, (usize, usize)> = BTreeMap::new();
    for r in records {
        let entry = cells.entry(GroupKey::of_record(r, group_by)).or_default();
        entry.0 += 1;
        if lexicon.matches(&tokenize(&r.text).tokens) {
            entry.1 += 1;
        }
    }
    cells
        .into_iter()
        .map(|(group, (n, hits))| HedgeRate { group, n, hits, proportion: hits as f64 / n as f64 })
        .collect()
}

/// `ln(p / (1 - p))` after clamping `p` into `[epsilon, 1 - epsilon]`.
pub fn logit_winsorize(p: f64, epsilon: f64) -> Result<f64, TextError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(TextError::BadEpsilon(epsilon));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(TextError::BadProportion(p));
    }
    let q = p.clamp(epsilon, 1.0 - epsilon);
    Ok(libm::log(q / (1.0 - q)))
}

/// Every per-description metric. Fields depending on an optional
/// resource are `None` when it was not supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleMetrics {
    pub record_id: String,
    pub n_words: usize,
    pub n_sentences: usize,
    /// `None` for empty text.
    pub entropy_bits: Option<f64>,
    pub ttr: Option<f64>,
    pub mean_pairwise_sim: Option<f64>,
    pub hedge_hit: Option<bool>,
    pub sentiment: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MetricResources<'a> {
    pub word_vectors: Option<&'a WordVectorTable>,
    pub hedges: Option<&'a HedgeLexicon>,
    pub valence: Option<&'a ValenceLexicon>,
}

pub fn style_metrics(record_id: &str, text: &str, resources: MetricResources<'_>) -> StyleMetrics {
    let tokenized = tokenize(text);
    let tokens = &tokenized.tokens;
    StyleMetrics {
        record_id: record_id.into(),
        n_words: tokens.len(),
        n_sentences: tokenized.sentence_spans.len(),
        entropy_bits: lexical_entropy(tokens).ok(),
        ttr: type_token_ratio(tokens).ok(),
        mean_pairwise_sim: resources.word_vectors.and_then(|wv| mean_pairwise_similarity(tokens, wv)),
        hedge_hit: resources.hedges.map(|h| h.matches(tokens)),
        sentiment: resources.valence.and_then(|lex| sentiment(text, lex).ok()),
    }
}
