//! Reference-corpus word frequencies and frequency-quantile matching of a
//! candidate pool against a target lexicon.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::stats::percentile_sorted;

pub const DEFAULT_SMOOTHING: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LexMatchError {
    #[error("reference corpus has no tokens")]
    EmptyCorpus,
    #[error("target lexicon is empty")]
    EmptyTarget,
    #[error("lexicon {0:?} has no terms")]
    EmptyLexicon(String),
    #[error("candidate pool has {available} terms, {requested} requested")]
    PoolExhausted { requested: usize, available: usize },
    #[error("output size must be positive")]
    ZeroSize,
    #[error("smoothing must be positive and finite, got {0}")]
    BadSmoothing(f64),
}

/// Token counts from a reference corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    total_tokens: u64,
    counts: BTreeMap<String, u64>,
    smoothing: f64,
}

impl FrequencyTable {
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn with_smoothing(mut self, smoothing: f64) -> Result<Self, LexMatchError> {
        if !(smoothing > 0.0 && smoothing.is_finite()) {
            return Err(LexMatchError::BadSmoothing(smoothing));
        }
        self.smoothing = smoothing;
        Ok(self)
    }

    /// Exact count; zero when unseen.
    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    /// Count, with the smoothing constant standing in for unseen tokens.
    pub fn smoothed_count(&self, token: &str) -> f64 {
        match self.counts.get(token) {
            Some(c) => *c as f64,
            None => self.smoothing,
        }
    }

    pub fn relative_frequency(&self, token: &str) -> f64 {
        self.smoothed_count(token) / self.total_tokens as f64
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Sums counts and totals. Keeps `self`'s smoothing.
    pub fn merge(mut self, other: &FrequencyTable) -> Self {
        self.total_tokens += other.total_tokens;
        for (token, count) in &other.counts {
            *self.counts.entry(token.clone()).or_insert(0) += count;
        }
        self
    }

    /// The value compared during matching.
    pub fn scaled(&self, token: &str, scale: FrequencyScale) -> f64 {
        match scale {
            FrequencyScale::Log => libm::log(self.count(token) as f64 + self.smoothing),
            FrequencyScale::Raw => self.smoothed_count(token),
            FrequencyScale::PerMillion => self.relative_frequency(token) * 1e6,
        }
    }
}

/// Counts every token of `tokens`.
pub fn build_frequency_table<I, S>(tokens: I) -> Result<FrequencyTable, LexMatchError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut total = 0u64;
    for t in tokens {
        let t = t.as_ref();
        match counts.get_mut(t) {
            Some(c) => *c += 1,
            None => {
                counts.insert(t.to_string(), 1);
            }
        }
        total += 1;
    }
    if total == 0 {
        return Err(LexMatchError::EmptyCorpus);
    }
    Ok(FrequencyTable { total_tokens: total, counts, smoothing: DEFAULT_SMOOTHING })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrequencyScale {
    /// `ln(count + smoothing)`.
    #[default]
    Log,
    Raw,
    PerMillion,
}

impl FrequencyScale {
    pub fn name(self) -> &'static str {
        match self {
            FrequencyScale::Log => "log",
            FrequencyScale::Raw => "raw",
            FrequencyScale::PerMillion => "per-million",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "log" => Some(FrequencyScale::Log),
            "raw" => Some(FrequencyScale::Raw),
            "per-million" => Some(FrequencyScale::PerMillion),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LexiconCategory {
    AffordancePermission,
    AffordanceInstrumental,
    AffordanceAccess,
    AffectPositive,
    AffectNegative,
    Custom,
}

impl LexiconCategory {
    pub fn name(self) -> &'static str {
        match self {
            LexiconCategory::AffordancePermission => "affordance_permission",
            LexiconCategory::AffordanceInstrumental => "affordance_instrumental",
            LexiconCategory::AffordanceAccess => "affordance_access",
            LexiconCategory::AffectPositive => "affect_positive",
            LexiconCategory::AffectNegative => "affect_negative",
            LexiconCategory::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            LexiconCategory::AffordancePermission,
            LexiconCategory::AffordanceInstrumental,
            LexiconCategory::AffordanceAccess,
            LexiconCategory::AffectPositive,
            LexiconCategory::AffectNegative,
            LexiconCategory::Custom,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }
}

/// A named, ordered set of lowercased terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub name: String,
    pub category: LexiconCategory,
    terms: Vec<String>,
    index: BTreeSet<String>,
}

impl Lexicon {
    /// Terms are trimmed and lowercased; blanks are skipped and repeats
    /// keep their first position.
    pub fn new<I, S>(name: impl Into<String>, category: LexiconCategory, terms: I) -> Result<Self, LexMatchError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let name = name.into();
        let mut seen = BTreeSet::new();
        let mut ordered = Vec::new();
        for t in terms {
            let t = t.as_ref().trim().to_lowercase();
            if !t.is_empty() && seen.insert(t.clone()) {
                ordered.push(t);
            }
        }
        if ordered.is_empty() {
            return Err(LexMatchError::EmptyLexicon(name));
        }
        Ok(Self { name, category, terms: ordered, index: seen })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains(term)
    }
}

/// One selection step of [`quantile_match`].
#[derive(Debug, Clone, PartialEq)]
pub struct MatchStep {
    pub quantile: f64,
    /// Interpolated target value at `quantile`.
    pub target_value: f64,
    pub term: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub lexicon: Lexicon,
    pub steps: Vec<MatchStep>,
}

/// Greedy without-replacement matching at quantiles `(j - 0.5) / n`,
/// processed in ascending order. Each quantile takes the unused candidate
/// closest in `scale`; ties go to the lexicographically smaller term.
pub fn quantile_match(
    target: &Lexicon,
    candidates: &Lexicon,
    freq: &FrequencyTable,
    out_size: usize,
    scale: FrequencyScale,
) -> Result<MatchResult, LexMatchError> {
    if target.is_empty() {
        return Err(LexMatchError::EmptyTarget);
    }
    if out_size == 0 {
        return Err(LexMatchError::ZeroSize);
    }
    if candidates.len() < out_size {
        return Err(LexMatchError::PoolExhausted { requested: out_size, available: candidates.len() });
    }
    let mut target_values: Vec<f64> = target.terms().iter().map(|t| freq.scaled(t, scale)).collect();
    target_values.sort_by(f64::total_cmp);

    let mut pool: Vec<(&str, f64)> = candidates.terms().iter().map(|t| (t.as_str(), freq.scaled(t, scale))).collect();
    pool.sort_by(|a, b| a.0.cmp(b.0));
    let mut used = alloc::vec![false; pool.len()];

    let mut steps = Vec::with_capacity(out_size);
    for j in 1..=out_size {
        let q = (j as f64 - 0.5) / out_size as f64;
        let f = percentile_sorted(&target_values, q).map_err(|_| LexMatchError::EmptyTarget)?;
        let mut best: Option<(usize, f64)> = None;
        for (k, (_, v)) in pool.iter().enumerate() {
            if used[k] {
                continue;
            }
            let gap = libm::fabs(v - f);
            if best.is_none_or(|(_, g)| gap < g) {
                best = Some((k, gap));
            }
        }
        let (k, _) = best.ok_or(LexMatchError::PoolExhausted { requested: out_size, available: candidates.len() })?;
        used[k] = true;
        steps.push(MatchStep { quantile: q, target_value: f, term: pool[k].0.to_string(), value: pool[k].1 });
    }
    let lexicon = Lexicon::new(
        alloc::format!("{}-matched-to-{}", candidates.name, target.name),
        candidates.category,
        steps.iter().map(|s| s.term.as_str()),
    )?;
    Ok(MatchResult { lexicon, steps })
}
