//! Construction features of lexicon-term occurrences in dependency parses,
//! and 2x2 comparisons of feature rates between corpora.
//!
//! Both Universal Dependencies relations (`obl`+`case`, `mark`,
//! `compound:prt`) and the ClearNLP labels used by spaCy's English models
//! (`prep`, `pobj`, `pcomp`, `prt`) are understood.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::lexmatch::{Lexicon, LexiconCategory};
use crate::stats::{chi2_2x2, StatsError};

pub const DEFAULT_MODALS: &[&str] = &["can", "could", "may", "might", "must", "shall", "should", "will", "would"];

pub const DEFAULT_SPATIAL_PREPOSITIONS: &[&str] = &[
    "through", "into", "onto", "across", "over", "under", "along", "around", "toward", "towards", "past", "up", "down",
    "behind", "beside", "near", "inside", "outside",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("sentence {0:?} has no tokens")]
    EmptySentence(String),
    #[error("sentence {sentence}: token ids are not 1..n (found {found} at position {position})")]
    NonSequentialIds { sentence: String, position: usize, found: usize },
    #[error("sentence {sentence}: token {token} has head {head} outside the sentence")]
    HeadOutOfRange { sentence: String, token: usize, head: usize },
    #[error("sentence {0:?} has no root")]
    NoRoot(String),
    #[error("sentence {0:?} has more than one root")]
    MultipleRoots(String),
    #[error("sentence {0:?} has cyclic heads")]
    CyclicHeads(String),
    #[error("feature counts have a zero total")]
    EmptyCorpusCounts,
    #[error("no occurrences of either lexicon")]
    ZeroDenominator,
    #[error("term {0:?} appears in both lexicons")]
    OverlappingLexicons(String),
}

/// One syntactic word, with all ten CoNLL-U columns kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedToken {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    /// 0 for the root.
    pub head: usize,
    pub deprel: String,
    pub deps: String,
    pub misc: String,
}

impl ParsedToken {
    /// Relation without its subtype (`nsubj:pass` -> `nsubj`).
    pub fn base_rel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or("")
    }

    pub fn has_feature(&self, feature: &str) -> bool {
        self.feats.split('|').any(|f| f == feature)
    }

    fn lower_lemma(&self) -> String {
        self.lemma.to_lowercase()
    }

    fn lower_form(&self) -> String {
        self.form.to_lowercase()
    }

    fn is_word(&self, word: &str) -> bool {
        self.lower_lemma() == word || self.lower_form() == word
    }

    fn is_gerund(&self) -> bool {
        self.xpos == "VBG" || self.has_feature("VerbForm=Ger")
    }
}

/// A line that is not a syntactic word (multiword range or empty node),
/// kept so sentences round-trip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLine {
    /// Number of syntactic words preceding the line.
    pub position: usize,
    pub line: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedSentence {
    pub sentence_id: String,
    pub corpus_id: String,
    /// Comment lines including the leading `#`.
    pub comments: Vec<String>,
    pub tokens: Vec<ParsedToken>,
    pub raw_lines: Vec<RawLine>,
}

impl ParsedSentence {
    /// Ids must run 1..n, heads must be in range, exactly one token may
    /// attach to 0 and following heads from any token must reach it.
    pub fn validate(&self) -> Result<(), SyntaxError> {
        let sid = || self.sentence_id.clone();
        let n = self.tokens.len();
        if n == 0 {
            return Err(SyntaxError::EmptySentence(sid()));
        }
        for (pos, t) in self.tokens.iter().enumerate() {
            if t.id != pos + 1 {
                return Err(SyntaxError::NonSequentialIds { sentence: sid(), position: pos, found: t.id });
            }
            if t.head > n {
                return Err(SyntaxError::HeadOutOfRange { sentence: sid(), token: t.id, head: t.head });
            }
        }
        let roots = self.tokens.iter().filter(|t| t.head == 0).count();
        // a cycle can leave no root at all, so check reachability first
        for start in 0..n {
            let mut at = start + 1;
            let mut steps = 0;
            while at != 0 {
                at = self.tokens[at - 1].head;
                steps += 1;
                if steps > n {
                    return Err(SyntaxError::CyclicHeads(sid()));
                }
            }
        }
        match roots {
            0 => Err(SyntaxError::NoRoot(sid())),
            1 => Ok(()),
            _ => Err(SyntaxError::MultipleRoots(sid())),
        }
    }

    pub fn token(&self, id: usize) -> Option<&ParsedToken> {
        id.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn root(&self) -> Option<&ParsedToken> {
        self.tokens.iter().find(|t| t.head == 0)
    }

    pub fn children(&self, id: usize) -> impl Iterator<Item = &ParsedToken> {
        self.tokens.iter().filter(move |t| t.head == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    AsVerb,
    SecondPerson,
    Modal,
    SpatialPrep,
    Imperative,
    Purpose,
}

impl Feature {
    pub const ALL: [Feature; 6] = [
        Feature::AsVerb,
        Feature::SecondPerson,
        Feature::Modal,
        Feature::SpatialPrep,
        Feature::Imperative,
        Feature::Purpose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::AsVerb => "as_verb",
            Feature::SecondPerson => "second_person",
            Feature::Modal => "modal",
            Feature::SpatialPrep => "spatial_prep",
            Feature::Imperative => "imperative",
            Feature::Purpose => "purpose",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchOn {
    #[default]
    Lemma,
    Form,
}

/// Which attachments of an infinitival or `for`+gerund clause count as
/// a purpose construction for the term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PurposeDirection {
    #[default]
    Both,
    /// The term is the clause's verb ("to *open*").
    TermInClause,
    /// The term governs the clause ("*use* it to open").
    TermGoverns,
}

impl PurposeDirection {
    pub fn name(self) -> &'static str {
        match self {
            PurposeDirection::Both => "both",
            PurposeDirection::TermInClause => "term-in-clause",
            PurposeDirection::TermGoverns => "term-governs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureOptions {
    pub match_on: MatchOn,
    pub modals: BTreeSet<String>,
    pub spatial_prepositions: BTreeSet<String>,
    pub purpose: PurposeDirection,
    /// Drop imperatives whose root carries a `?` punctuation dependent.
    pub exclude_questions: bool,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            match_on: MatchOn::Lemma,
            modals: DEFAULT_MODALS.iter().map(|s| s.to_string()).collect(),
            spatial_prepositions: DEFAULT_SPATIAL_PREPOSITIONS.iter().map(|s| s.to_string()).collect(),
            purpose: PurposeDirection::Both,
            exclude_questions: true,
        }
    }
}

/// Features of one term occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    pub sentence_id: String,
    pub token_id: usize,
    pub term: String,
    pub values: [bool; 6],
}

impl FeatureVector {
    pub fn get(&self, feature: Feature) -> bool {
        self.values[feature.index()]
    }
}

fn term_key(token: &ParsedToken, match_on: MatchOn) -> String {
    match match_on {
        MatchOn::Lemma => token.lower_lemma(),
        MatchOn::Form => token.lower_form(),
    }
}

fn second_person(sentence: &ParsedSentence) -> bool {
    sentence.tokens.iter().any(|t| t.lower_lemma() == "you" || matches!(t.lower_form().as_str(), "your" | "yours"))
}

fn imperative(sentence: &ParsedSentence, options: &FeatureOptions) -> bool {
    let Some(root) = sentence.root() else {
        return false;
    };
    let base_form = root.xpos == "VB" || root.has_feature("VerbForm=Inf") || root.has_feature("Mood=Imp");
    if root.upos != "VERB" || !base_form {
        return false;
    }
    let mut children = sentence.children(root.id);
    if children.any(|c| c.deprel.starts_with("nsubj") || c.deprel.starts_with("csubj")) {
        return false;
    }
    if options.exclude_questions && sentence.children(root.id).any(|c| c.upos == "PUNCT" && c.form == "?") {
        return false;
    }
    match sentence.tokens.iter().find(|t| t.upos != "PUNCT") {
        Some(first) if first.id == root.id => true,
        Some(first) => first.head == root.id && matches!(first.deprel.as_str(), "prt" | "compound:prt"),
        None => false,
    }
}

fn has_modal(sentence: &ParsedSentence, term: &ParsedToken, options: &FeatureOptions) -> bool {
    sentence.children(term.id).any(|c| {
        c.base_rel() == "aux" && (options.modals.contains(&c.lower_lemma()) || options.modals.contains(&c.lower_form()))
    })
}

fn is_spatial(token: &ParsedToken, options: &FeatureOptions) -> bool {
    options.spatial_prepositions.contains(&token.lower_lemma())
        || options.spatial_prepositions.contains(&token.lower_form())
}

fn has_spatial_prep(sentence: &ParsedSentence, term: &ParsedToken, options: &FeatureOptions) -> bool {
    sentence.children(term.id).any(|c| match c.base_rel() {
        "prep" => is_spatial(c, options),
        "obl" | "nmod" => sentence.children(c.id).any(|g| g.base_rel() == "case" && is_spatial(g, options)),
        _ => false,
    })
}

fn to_marked(sentence: &ParsedSentence, id: usize) -> bool {
    sentence
        .children(id)
        .any(|c| c.is_word("to") && c.upos == "PART" && matches!(c.base_rel(), "mark" | "aux"))
}

fn for_gerund(sentence: &ParsedSentence, token: &ParsedToken) -> bool {
    if !token.is_gerund() {
        return false;
    }
    let marked = sentence.children(token.id).any(|c| c.is_word("for") && matches!(c.base_rel(), "mark" | "case"));
    let under_for = matches!(token.base_rel(), "pcomp" | "pobj")
        && sentence.token(token.head).is_some_and(|h| h.is_word("for"));
    marked || under_for
}

fn purpose(sentence: &ParsedSentence, term: &ParsedToken, direction: PurposeDirection) -> bool {
    let inside = || to_marked(sentence, term.id) || for_gerund(sentence, term);
    let governs = || {
        sentence.children(term.id).any(|c| {
            let clause = matches!(c.base_rel(), "advcl" | "xcomp" | "acl" | "ccomp") && to_marked(sentence, c.id);
            let gerund = for_gerund(sentence, c);
            let via_prep = c.base_rel() == "prep" && c.is_word("for") && sentence.children(c.id).any(|g| for_gerund(sentence, g));
            clause || gerund || via_prep
        })
    };
    match direction {
        PurposeDirection::Both => inside() || governs(),
        PurposeDirection::TermInClause => inside(),
        PurposeDirection::TermGoverns => governs(),
    }
}

/// One row per token whose lemma (or form) is a lexicon term.
pub fn extract_features(sentence: &ParsedSentence, lexicon: &Lexicon, options: &FeatureOptions) -> Vec<FeatureVector> {
    let mut rows = Vec::new();
    let mut sentence_level: Option<(bool, bool)> = None;
    for token in &sentence.tokens {
        let key = term_key(token, options.match_on);
        if !lexicon.contains(&key) {
            continue;
        }
        let (you, imp) = *sentence_level.get_or_insert_with(|| (second_person(sentence), imperative(sentence, options)));
        let mut values = [false; 6];
        values[Feature::AsVerb.index()] = matches!(token.upos.as_str(), "VERB" | "AUX");
        values[Feature::SecondPerson.index()] = you;
        values[Feature::Modal.index()] = has_modal(sentence, token, options);
        values[Feature::SpatialPrep.index()] = has_spatial_prep(sentence, token, options);
        values[Feature::Imperative.index()] = imp;
        values[Feature::Purpose.index()] = purpose(sentence, token, options.purpose);
        rows.push(FeatureVector { sentence_id: sentence.sentence_id.clone(), token_id: token.id, term: key, values });
    }
    rows
}

/// With-feature counts per feature over a corpus's term occurrences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureCounts {
    pub corpus_id: String,
    pub category: LexiconCategory,
    pub total: u64,
    pub with: [u64; 6],
}

impl FeatureCounts {
    pub fn new(corpus_id: impl Into<String>, category: LexiconCategory) -> Self {
        Self { corpus_id: corpus_id.into(), category, total: 0, with: [0; 6] }
    }

    pub fn add(&mut self, row: &FeatureVector) {
        self.total += 1;
        for (w, v) in self.with.iter_mut().zip(row.values) {
            *w += u64::from(v);
        }
    }

    pub fn merge(&mut self, other: &FeatureCounts) {
        self.total += other.total;
        for (w, o) in self.with.iter_mut().zip(other.with) {
            *w += o;
        }
    }

    pub fn with(&self, feature: Feature) -> u64 {
        self.with[feature.index()]
    }

    pub fn without(&self, feature: Feature) -> u64 {
        self.total - self.with(feature)
    }

    pub fn rate(&self, feature: Feature) -> f64 {
        self.with(feature) as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureComparison {
    pub feature: Feature,
    pub rate_a: f64,
    pub rate_b: f64,
    /// `100 * (rate_b - rate_a)`.
    pub percent_difference: f64,
    pub chi2: f64,
    pub p_value: f64,
    pub cramers_v: f64,
    /// A zero margin (feature always or never present in both corpora);
    /// reported as no association.
    pub degenerate: bool,
}

/// Per-feature 2x2 chi-squared (no continuity correction) of corpus `a`
/// against corpus `b`.
pub fn compare_corpora(a: &FeatureCounts, b: &FeatureCounts) -> Result<Vec<FeatureComparison>, SyntaxError> {
    if a.total == 0 || b.total == 0 {
        return Err(SyntaxError::EmptyCorpusCounts);
    }
    Ok(Feature::ALL
        .iter()
        .map(|&feature| {
            let (rate_a, rate_b) = (a.rate(feature), b.rate(feature));
            let test = chi2_2x2(a.with(feature), a.without(feature), b.with(feature), b.without(feature));
            let (chi2, p_value, cramers_v, degenerate) = match test {
                Ok(r) => (r.test.statistic, r.test.p_value, r.cramers_v, false),
                Err(StatsError::DegenerateMargin) => (0.0, 1.0, 0.0, true),
                Err(e) => unreachable!("2x2 counts with positive totals: {e}"),
            };
            FeatureComparison {
                feature,
                rate_a,
                rate_b,
                percent_difference: 100.0 * (rate_b - rate_a),
                chi2,
                p_value,
                cramers_v,
                degenerate,
            }
        })
        .collect())
}

/// Occurrence count per lexicon term.
pub fn term_occurrences<'a, I>(sentences: I, lexicon: &Lexicon, match_on: MatchOn) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = &'a ParsedSentence>,
{
    let mut counts = BTreeMap::new();
    for s in sentences {
        for t in &s.tokens {
            let key = term_key(t, match_on);
            if lexicon.contains(&key) {
                *counts.entry(key).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Share of `lexicon_a` occurrences among occurrences of either lexicon.
pub fn matched_term_share(
    occurrences: &BTreeMap<String, u64>,
    lexicon_a: &Lexicon,
    lexicon_b: &Lexicon,
) -> Result<f64, SyntaxError> {
    if let Some(t) = lexicon_a.terms().iter().find(|t| lexicon_b.contains(t)) {
        return Err(SyntaxError::OverlappingLexicons(t.clone()));
    }
    let sum = |lex: &Lexicon| lex.terms().iter().map(|t| occurrences.get(t).copied().unwrap_or(0)).sum::<u64>();
    let (a, b) = (sum(lexicon_a), sum(lexicon_b));
    if a + b == 0 {
        return Err(SyntaxError::ZeroDenominator);
    }
    Ok(a as f64 / (a + b) as f64)
}
