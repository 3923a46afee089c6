//! Plain term lists and `token<TAB>valence` sentiment lexicons.
//!
//! Both formats skip blank lines and lines starting with `#`.

use hcd_core::textmetrics::ValenceLexicon;

#[derive(Debug, thiserror::Error)]
pub enum LexFileError {
    #[error("file is not UTF-8")]
    NotUtf8,
    #[error("line {line}: expected `token<TAB>valence`")]
    MissingValence { line: usize },
    #[error("line {line}: {value:?} is not a finite number")]
    BadValence { line: usize, value: String },
}

fn content_lines(bytes: &[u8]) -> Result<impl Iterator<Item = (usize, &str)>, LexFileError> {
    let text = std::str::from_utf8(bytes).map_err(|_| LexFileError::NotUtf8)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#')))
}

/// One term per line, trimmed, in file order.
pub fn read_terms(bytes: &[u8]) -> Result<Vec<String>, LexFileError> {
    Ok(content_lines(bytes)?.map(|(_, l)| l.trim().to_string()).collect())
}

/// `token<TAB>valence[<TAB>...]`; further columns are ignored and later
/// lines replace earlier ones.
pub fn read_valence(bytes: &[u8]) -> Result<ValenceLexicon, LexFileError> {
    let mut lexicon = ValenceLexicon::new();
    for (line, text) in content_lines(bytes)? {
        let mut cols = text.split('\t');
        let token = cols.next().unwrap_or("").trim();
        let value = cols.next().ok_or(LexFileError::MissingValence { line })?.trim();
        let valence: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| LexFileError::BadValence { line, value: value.into() })?;
        if token.is_empty() {
            return Err(LexFileError::MissingValence { line });
        }
        lexicon.insert(token, valence);
    }
    Ok(lexicon)
}
