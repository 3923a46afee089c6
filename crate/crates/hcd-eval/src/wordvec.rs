//! Word vectors in the text format: a `<count> <dim>` header, then one
//! `<token> <v1> ... <vdim>` line per token.

use hcd_core::embed::{EmbedError, WordVectorTable};

#[derive(Debug, thiserror::Error)]
pub enum WordVecError {
    #[error("line 1: expected a `<count> <dim>` header")]
    BadHeader,
    #[error("line {line}: expected {expected} values, got {got}")]
    DimMismatch { line: usize, expected: usize, got: usize },
    #[error("line {line}: {value:?} is not a number")]
    BadValue { line: usize, value: String },
    #[error("line {line}: non-finite component")]
    NonFiniteValue { line: usize },
    #[error("header promises {expected} vectors, body has {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("file is not UTF-8")]
    NotUtf8,
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Parses a word-vector file. Tokens are kept verbatim; when a token
/// repeats, its first vector wins.
pub fn parse(bytes: &[u8]) -> Result<WordVectorTable, WordVecError> {
    let text = std::str::from_utf8(bytes).map_err(|_| WordVecError::NotUtf8)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(WordVecError::BadHeader)?;
    let mut fields = header.split_whitespace();
    let (Some(count), Some(dim), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(WordVecError::BadHeader);
    };
    let count: usize = count.parse().map_err(|_| WordVecError::BadHeader)?;
    let dim: usize = dim.parse().map_err(|_| WordVecError::BadHeader)?;
    let mut table = WordVectorTable::new(dim)?;
    let mut seen = 0;
    for (i, line) in lines {
        let line_no = i + 1;
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-blank line");
        let values: Vec<&str> = parts.collect();
        if values.len() != dim {
            return Err(WordVecError::DimMismatch { line: line_no, expected: dim, got: values.len() });
        }
        let mut vector = Vec::with_capacity(dim);
        for v in values {
            let x: f64 = v.parse().map_err(|_| WordVecError::BadValue { line: line_no, value: v.into() })?;
            if !x.is_finite() {
                return Err(WordVecError::NonFiniteValue { line: line_no });
            }
            vector.push(x);
        }
        seen += 1;
        if table.get(token).is_none() {
            table.insert(token, vector)?;
        }
    }
    if seen != count {
        return Err(WordVecError::CountMismatch { expected: count, got: seen });
    }
    table.validate()?;
    Ok(table)
}

/// Writes a table in token order with `f32`-precision values.
pub fn write(table: &WordVectorTable) -> String {
    let mut out = format!("{} {}\n", table.len(), table.dim());
    for (token, vector) in table.iter() {
        out.push_str(token);
        for v in vector {
            out.push(' ');
            out.push_str(&(*v as f32).to_string());
        }
        out.push('\n');
    }
    out
}
