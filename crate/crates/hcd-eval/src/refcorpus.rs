//! Reference corpora for frequency estimation.
//!
//! Tagged corpora carry whitespace-separated `word/TAG` items (the Brown
//! corpus distribution format); plain corpora are running text. Either
//! way, words pass through the description tokenizer so that counts and
//! lexicon lookups agree.

use hcd_core::textmetrics::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefFormat {
    /// Tagged if at least 90% of whitespace items look like `word/TAG`.
    #[default]
    Auto,
    Tagged,
    Text,
}

impl RefFormat {
    pub fn name(self) -> &'static str {
        match self {
            RefFormat::Auto => "auto",
            RefFormat::Tagged => "tagged",
            RefFormat::Text => "text",
        }
    }
}

fn split_tagged(item: &str) -> Option<&str> {
    let (word, tag) = item.rsplit_once('/')?;
    (!word.is_empty() && !tag.is_empty()).then_some(word)
}

/// Resolves [`RefFormat::Auto`] by inspecting the items.
pub fn detect(text: &str) -> RefFormat {
    let (mut items, mut tagged) = (0usize, 0usize);
    for item in text.split_whitespace() {
        items += 1;
        tagged += split_tagged(item).is_some() as usize;
    }
    if items > 0 && tagged * 10 >= items * 9 {
        RefFormat::Tagged
    } else {
        RefFormat::Text
    }
}

/// Lowercased tokens of a reference corpus, with the format that was used.
pub fn tokens(text: &str, format: RefFormat) -> (Vec<String>, RefFormat) {
    let format = if format == RefFormat::Auto { detect(text) } else { format };
    let out = match format {
        RefFormat::Tagged => text
            .split_whitespace()
            .flat_map(|item| tokenize(split_tagged(item).unwrap_or(item)).tokens)
            .collect(),
        _ => text.lines().flat_map(|line| tokenize(line).tokens).collect(),
    };
    (out, format)
}
