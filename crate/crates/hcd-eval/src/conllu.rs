//! CoNLL-U reading and writing.
//!
//! Comment lines are kept verbatim, multiword ranges (`3-4`) and empty
//! nodes (`5.1`) are kept as raw lines at their position, and a file in
//! canonical form (every sentence followed by one blank line) is
//! reproduced byte for byte by [`write`].

use hcd_core::syntax::{ParsedSentence, ParsedToken, RawLine, SyntaxError};

use crate::corpus_io::SchemaMode;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConlluError {
    #[error("line {line}: malformed token line")]
    MalformedToken { line: usize },
    #[error("line {line}: comment after the first token")]
    MisplacedComment { line: usize },
    #[error("file is not UTF-8")]
    NotUtf8,
    #[error("sentence starting on line {line}: {error}")]
    Invalid { line: usize, error: SyntaxError },
}

#[derive(Debug, Clone, Default)]
pub struct LoadedParses {
    pub sentences: Vec<ParsedSentence>,
    /// Sentences skipped in lenient mode.
    pub skipped: Vec<ConlluError>,
}

fn parse_token(line: &str, line_no: usize) -> Result<ParsedToken, ConlluError> {
    let cols: Vec<&str> = line.split('\t').collect();
    let bad = || ConlluError::MalformedToken { line: line_no };
    if cols.len() != 10 || cols.iter().any(|c| c.is_empty()) {
        return Err(bad());
    }
    let number = |s: &str| s.parse::<usize>().ok().filter(|_| s.bytes().all(|b| b.is_ascii_digit()));
    Ok(ParsedToken {
        id: number(cols[0]).filter(|id| *id > 0).ok_or_else(bad)?,
        form: cols[1].into(),
        lemma: cols[2].into(),
        upos: cols[3].into(),
        xpos: cols[4].into(),
        feats: cols[5].into(),
        head: number(cols[6]).ok_or_else(bad)?,
        deprel: cols[7].into(),
        deps: cols[8].into(),
        misc: cols[9].into(),
    })
}

fn is_raw_id(first_col: &str) -> bool {
    first_col.contains('-') || first_col.contains('.')
}

fn sentence_id(comments: &[String]) -> Option<String> {
    comments.iter().find_map(|c| {
        let body = c.strip_prefix('#')?.trim_start();
        let rest = body.strip_prefix("sent_id")?.trim_start();
        Some(rest.strip_prefix('=')?.trim().to_string())
    })
}

struct Pending {
    start_line: usize,
    comments: Vec<String>,
    tokens: Vec<ParsedToken>,
    raw_lines: Vec<RawLine>,
    error: Option<ConlluError>,
}

impl Pending {
    fn new(start_line: usize) -> Self {
        Self { start_line, comments: Vec::new(), tokens: Vec::new(), raw_lines: Vec::new(), error: None }
    }

    fn is_empty(&self) -> bool {
        self.comments.is_empty() && self.tokens.is_empty() && self.raw_lines.is_empty() && self.error.is_none()
    }

    fn finish(self, corpus_id: &str, index: usize) -> Result<ParsedSentence, ConlluError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let sentence = ParsedSentence {
            sentence_id: sentence_id(&self.comments).unwrap_or_else(|| format!("{corpus_id}:{index}")),
            corpus_id: corpus_id.into(),
            comments: self.comments,
            tokens: self.tokens,
            raw_lines: self.raw_lines,
        };
        sentence.validate().map_err(|error| ConlluError::Invalid { line: self.start_line, error })?;
        Ok(sentence)
    }
}

/// Parses CoNLL-U text. Sentences without a `# sent_id` comment are
/// named `<corpus_id>:<n>` with `n` counting sentences from 1.
pub fn parse(bytes: &[u8], corpus_id: &str, mode: SchemaMode) -> Result<LoadedParses, ConlluError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ConlluError::NotUtf8)?;
    let mut out = LoadedParses::default();
    let mut pending = Pending::new(1);
    let mut index = 0;

    let mut flush = |pending: Pending, out: &mut LoadedParses| -> Result<(), ConlluError> {
        if pending.is_empty() {
            return Ok(());
        }
        index += 1;
        match pending.finish(corpus_id, index) {
            Ok(s) => out.sentences.push(s),
            Err(e) if mode == SchemaMode::Lenient => out.skipped.push(e),
            Err(e) => return Err(e),
        }
        Ok(())
    };

    for (i, line) in text.split('\n').enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            let done = std::mem::replace(&mut pending, Pending::new(line_no + 1));
            flush(done, &mut out)?;
            continue;
        }
        if pending.is_empty() {
            pending.start_line = line_no;
        }
        if pending.error.is_some() {
            continue;
        }
        if line.starts_with('#') {
            if pending.tokens.is_empty() && pending.raw_lines.is_empty() {
                pending.comments.push(line.into());
            } else {
                pending.error = Some(ConlluError::MisplacedComment { line: line_no });
            }
            continue;
        }
        let first = line.split('\t').next().unwrap_or("");
        if is_raw_id(first) && line.split('\t').count() == 10 {
            pending.raw_lines.push(RawLine { position: pending.tokens.len(), line: line.into() });
            continue;
        }
        match parse_token(line, line_no) {
            Ok(t) => pending.tokens.push(t),
            Err(e) => pending.error = Some(e),
        }
    }
    flush(pending, &mut out)?;
    Ok(out)
}

fn token_line(t: &ParsedToken) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        t.id, t.form, t.lemma, t.upos, t.xpos, t.feats, t.head, t.deprel, t.deps, t.misc
    )
}

/// Canonical CoNLL-U: comments, then words with raw lines at their
/// positions, then one blank line per sentence.
pub fn write(sentences: &[ParsedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for c in &s.comments {
            out.push_str(c);
            out.push('\n');
        }
        let mut raw = s.raw_lines.iter().peekable();
        for (pos, t) in s.tokens.iter().enumerate() {
            while let Some(r) = raw.next_if(|r| r.position <= pos) {
                out.push_str(&r.line);
                out.push('\n');
            }
            out.push_str(&token_line(t));
            out.push('\n');
        }
        for r in raw {
            out.push_str(&r.line);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
