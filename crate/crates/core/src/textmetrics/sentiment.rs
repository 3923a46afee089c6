//! VADER-style rule-based sentiment.
//!
//! Follows the reference heuristics (valence lookup, negation within three
//! tokens, boosters and dampeners, ALL-CAPS emphasis, "least", "but",
//! special idioms, `!`/`?` amplification) with two differences: emoji are
//! not translated, and "but" reweighting goes by token position.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::TextError;

const B_INCR: f64 = 0.293;
const B_DECR: f64 = -0.293;
const C_INCR: f64 = 0.733;
const N_SCALAR: f64 = -0.74;
const ALPHA: f64 = 15.0;

const NEGATE: &[&str] = &[
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "ain't", "aren't", "can't",
    "couldn't", "daren't", "didn't", "doesn't", "dont", "hadnt", "hasnt", "havent", "isnt", "mightnt", "mustnt",
    "neither", "don't", "hadn't", "hasn't", "haven't", "isn't", "mightn't", "mustn't", "neednt", "needn't",
    "never", "none", "nope", "nor", "not", "nothing", "nowhere", "oughtnt", "shant", "shouldnt", "uhuh",
    "wasnt", "werent", "oughtn't", "shan't", "shouldn't", "uh-uh", "wasn't", "weren't", "without", "wont",
    "wouldnt", "won't", "wouldn't", "rarely", "seldom", "despite",
];

const BOOSTERS_UP: &[&str] = &[
    "absolutely", "amazingly", "awfully", "completely", "considerable", "considerably", "decidedly", "deeply",
    "effing", "enormous", "enormously", "entirely", "especially", "exceptional", "exceptionally", "extreme",
    "extremely", "fabulously", "flipping", "flippin", "frackin", "fracking", "fricking", "frickin", "frigging",
    "friggin", "fully", "fuckin", "fucking", "fuggin", "fugging", "greatly", "hella", "highly", "hugely",
    "incredible", "incredibly", "intensely", "major", "majorly", "more", "most", "particularly", "purely",
    "quite", "really", "remarkably", "so", "substantially", "thoroughly", "total", "totally", "tremendous",
    "tremendously", "uber", "unbelievably", "unusually", "utter", "utterly", "very",
];

const BOOSTERS_DOWN: &[&str] = &[
    "almost", "barely", "hardly", "just enough", "kind of", "kinda", "kindof", "kind-of", "less", "little",
    "marginal", "marginally", "occasional", "occasionally", "partly", "scarce", "scarcely", "slight", "slightly",
    "somewhat", "sort of", "sorta", "sortof", "sort-of",
];

const SPECIAL_CASES: &[(&str, f64)] = &[
    ("the shit", 3.0),
    ("the bomb", 3.0),
    ("bad ass", 1.5),
    ("badass", 1.5),
    ("bus stop", 0.0),
    ("yeah right", -2.0),
    ("kiss of death", -1.5),
    ("to die for", 3.0),
    ("beating heart", 3.5),
];

fn booster(word_lower: &str) -> Option<f64> {
    if BOOSTERS_UP.contains(&word_lower) {
        Some(B_INCR)
    } else if BOOSTERS_DOWN.contains(&word_lower) {
        Some(B_DECR)
    } else {
        None
    }
}

fn special_case(phrase: &str) -> Option<f64> {
    SPECIAL_CASES.iter().find(|(p, _)| *p == phrase).map(|(_, v)| *v)
}

fn negated(word_lower: &str) -> bool {
    NEGATE.contains(&word_lower) || word_lower.contains("n't")
}

/// Python `str.isupper`: some cased character, none lowercase.
fn is_upper(word: &str) -> bool {
    word.chars().any(char::is_uppercase) && !word.chars().any(char::is_lowercase)
}

/// Token to valence map (valences nominally in `[-4, 4]`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValenceLexicon {
    entries: BTreeMap<String, f64>,
}

impl ValenceLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Later insertions replace earlier ones.
    pub fn insert(&mut self, token: impl Into<String>, valence: f64) {
        self.entries.insert(token.into(), valence);
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for ValenceLexicon {
    fn from_iter<T: IntoIterator<Item = (S, f64)>>(iter: T) -> Self {
        let mut lex = Self::new();
        for (token, valence) in iter {
            lex.insert(token, valence);
        }
        lex
    }
}

/// Whitespace tokens with surrounding ASCII punctuation stripped, unless
/// stripping leaves two characters or fewer (emoticons survive).
fn words_and_emoticons(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            let stripped = w.trim_matches(|c: char| c.is_ascii_punctuation());
            if stripped.chars().count() <= 2 { w } else { stripped }.to_string()
        })
        .collect()
}

struct Scorer<'a> {
    lexicon: &'a ValenceLexicon,
    words: Vec<String>,
    lower: Vec<String>,
    cap_diff: bool,
}

impl Scorer<'_> {
    fn in_lexicon(&self, i: usize) -> bool {
        self.lexicon.contains(&self.lower[i])
    }

    fn scalar_inc_dec(&self, j: usize, valence: f64) -> f64 {
        let Some(mut scalar) = booster(&self.lower[j]) else {
            return 0.0;
        };
        if valence < 0.0 {
            scalar = -scalar;
        }
        if is_upper(&self.words[j]) && self.cap_diff {
            if valence > 0.0 {
                scalar += C_INCR;
            } else {
                scalar -= C_INCR;
            }
        }
        scalar
    }

    fn negation_check(&self, mut valence: f64, start: usize, i: usize) -> f64 {
        let w = &self.lower;
        let is = |k: usize, s: &str| w[k] == s;
        match start {
            0 => {
                if negated(&w[i - 1]) {
                    valence *= N_SCALAR;
                }
            }
            1 => {
                if is(i - 2, "never") && (is(i - 1, "so") || is(i - 1, "this")) {
                    valence *= 1.25;
                } else if is(i - 2, "without") && is(i - 1, "doubt") {
                } else if negated(&w[i - 2]) {
                    valence *= N_SCALAR;
                }
            }
            _ => {
                // operator precedence as in the reference implementation
                if (is(i - 3, "never") && (is(i - 2, "so") || is(i - 2, "this"))) || (is(i - 1, "so") || is(i - 1, "this"))
                {
                    valence *= 1.25;
                } else if is(i - 3, "without") && (is(i - 2, "doubt") || is(i - 1, "doubt")) {
                } else if negated(&w[i - 3]) {
                    valence *= N_SCALAR;
                }
            }
        }
        valence
    }

    fn special_idioms_check(&self, mut valence: f64, i: usize) -> f64 {
        let w = &self.lower;
        let join2 = |a: usize, b: usize| alloc::format!("{} {}", w[a], w[b]);
        let join3 = |a: usize, b: usize, c: usize| alloc::format!("{} {} {}", w[a], w[b], w[c]);
        let onezero = join2(i - 1, i);
        let twoonezero = join3(i - 2, i - 1, i);
        let twoone = join2(i - 2, i - 1);
        let threetwoone = join3(i - 3, i - 2, i - 1);
        let threetwo = join2(i - 3, i - 2);

        for seq in [&onezero, &twoonezero, &twoone, &threetwoone, &threetwo] {
            if let Some(v) = special_case(seq) {
                valence = v;
                break;
            }
        }
        if w.len() > i + 1 {
            if let Some(v) = special_case(&join2(i, i + 1)) {
                valence = v;
            }
        }
        if w.len() > i + 2 {
            if let Some(v) = special_case(&join3(i, i + 1, i + 2)) {
                valence = v;
            }
        }
        for ngram in [&threetwoone, &threetwo, &twoone] {
            if let Some(b) = booster(ngram) {
                valence += b;
            }
        }
        valence
    }

    fn least_check(&self, valence: f64, i: usize) -> f64 {
        let w = &self.lower;
        if i > 0 && w[i - 1] == "least" && !self.in_lexicon(i - 1) {
            if i > 1 {
                if w[i - 2] != "at" && w[i - 2] != "very" {
                    return valence * N_SCALAR;
                }
            } else {
                return valence * N_SCALAR;
            }
        }
        valence
    }

    fn valence_at(&self, i: usize) -> f64 {
        let w = &self.lower;
        let Some(base) = self.lexicon.get(&w[i]) else {
            return 0.0;
        };
        let mut valence = base;
        let last = w.len() - 1;
        if w[i] == "no" && i != last && self.in_lexicon(i + 1) {
            valence = 0.0;
        }
        if (i > 0 && w[i - 1] == "no")
            || (i > 1 && w[i - 2] == "no")
            || (i > 2 && w[i - 3] == "no" && (w[i - 1] == "or" || w[i - 1] == "nor"))
        {
            valence = base * N_SCALAR;
        }
        if is_upper(&self.words[i]) && self.cap_diff {
            if valence > 0.0 {
                valence += C_INCR;
            } else {
                valence -= C_INCR;
            }
        }
        for start in 0..3 {
            if i > start && !self.in_lexicon(i - start - 1) {
                let mut s = self.scalar_inc_dec(i - start - 1, valence);
                if start == 1 && s != 0.0 {
                    s *= 0.95;
                }
                if start == 2 && s != 0.0 {
                    s *= 0.9;
                }
                valence += s;
                valence = self.negation_check(valence, start, i);
                if start == 2 {
                    valence = self.special_idioms_check(valence, i);
                }
            }
        }
        self.least_check(valence, i)
    }
}

fn punctuation_emphasis(text: &str) -> f64 {
    let exclamations = text.matches('!').count().min(4);
    let questions = text.matches('?').count();
    let qm = match questions {
        0 | 1 => 0.0,
        2 | 3 => questions as f64 * 0.18,
        _ => 0.96,
    };
    exclamations as f64 * 0.292 + qm
}

/// Per-token valences after all local rules and "but" reweighting.
pub fn token_valences(text: &str, lexicon: &ValenceLexicon) -> Vec<f64> {
    let words = words_and_emoticons(text);
    let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let caps = words.iter().filter(|w| is_upper(w)).count();
    let cap_diff = caps > 0 && caps < words.len();
    let scorer = Scorer { lexicon, words, lower, cap_diff };

    let n = scorer.lower.len();
    let mut valences = Vec::with_capacity(n);
    for i in 0..n {
        let w = &scorer.lower[i];
        if booster(w).is_some() || (i + 1 < n && w == "kind" && scorer.lower[i + 1] == "of") {
            valences.push(0.0);
            continue;
        }
        valences.push(scorer.valence_at(i));
    }
    if let Some(but) = scorer.lower.iter().position(|w| w == "but") {
        for (i, v) in valences.iter_mut().enumerate() {
            if i < but {
                *v *= 0.5;
            } else if i > but {
                *v *= 1.5;
            }
        }
    }
    valences
}

/// Normalized compound score in `[-1, 1]`.
pub fn compound(text: &str, lexicon: &ValenceLexicon) -> f64 {
    let valences = token_valences(text, lexicon);
    if valences.is_empty() {
        return 0.0;
    }
    let mut sum: f64 = valences.iter().sum();
    let emphasis = punctuation_emphasis(text);
    if sum > 0.0 {
        sum += emphasis;
    } else if sum < 0.0 {
        sum -= emphasis;
    }
    (sum / libm::sqrt(sum * sum + ALPHA)).clamp(-1.0, 1.0)
}

/// Compound score rescaled to `[-100, 100]`.
pub fn sentiment(text: &str, lexicon: &ValenceLexicon) -> Result<f64, TextError> {
    if lexicon.is_empty() {
        return Err(TextError::MissingLexicon);
    }
    Ok(100.0 * compound(text, lexicon))
}
