//! The `EMB1` binary embedding format.
//!
//! Layout, all integers little-endian: magic `EMB1`, `u32` dim, `u64`
//! count, then per record a `u16` id byte length, the UTF-8 id and `dim`
//! `f32` values.

use std::path::{Path, PathBuf};

use hcd_core::embed::{EmbedError, EmbeddingMatrix};

pub const MAGIC: &[u8; 4] = b"EMB1";

#[derive(Debug, thiserror::Error)]
pub enum Emb1Error {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("missing EMB1 magic bytes")]
    BadMagic,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("file ends inside record {record}")]
    TruncatedFile { record: u64 },
    #[error("non-finite component in vector {0:?}")]
    NonFiniteValue(String),
    #[error("{0} bytes after the last record")]
    TrailingBytes(usize),
    #[error("record {0} has an id that is not UTF-8")]
    InvalidId(u64),
    #[error("id {0:?} is longer than 65535 bytes")]
    IdTooLong(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
    record: u64,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], Emb1Error> {
        let end = self.at.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or(Emb1Error::TruncatedFile { record: self.record })?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], Emb1Error> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}

/// Decodes an `EMB1` file. Values are widened from `f32` exactly.
pub fn decode(bytes: &[u8], embedder_id: &str, expected_dim: Option<usize>) -> Result<EmbeddingMatrix, Emb1Error> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Emb1Error::BadMagic);
    }
    let mut cur = Cursor { bytes, at: 4, record: 0 };
    let dim = u32::from_le_bytes(cur.array()?) as usize;
    if let Some(expected) = expected_dim {
        if expected != dim {
            return Err(Emb1Error::DimMismatch { expected, got: dim });
        }
    }
    let count = u64::from_le_bytes(cur.array()?);
    let mut matrix = EmbeddingMatrix::new(embedder_id, dim)?;
    let mut row = vec![0.0f64; dim];
    for record in 0..count {
        cur.record = record;
        let id_len = u16::from_le_bytes(cur.array()?) as usize;
        let id = std::str::from_utf8(cur.take(id_len)?).map_err(|_| Emb1Error::InvalidId(record))?;
        let values = cur.take(dim.checked_mul(4).ok_or(Emb1Error::TruncatedFile { record })?)?;
        for (slot, chunk) in row.iter_mut().zip(values.chunks_exact(4)) {
            *slot = f32::from_le_bytes(chunk.try_into().expect("chunk of 4")) as f64;
        }
        matrix.push(id, &row).map_err(|e| match e {
            EmbedError::NonFiniteValue(id) => Emb1Error::NonFiniteValue(id),
            other => Emb1Error::Embed(other),
        })?;
    }
    if cur.at != bytes.len() {
        return Err(Emb1Error::TrailingBytes(bytes.len() - cur.at));
    }
    Ok(matrix)
}

/// Encodes `rows` as `EMB1`, narrowing each value to `f32`.
pub fn encode<'a, I>(dim: usize, rows: I) -> Result<Vec<u8>, Emb1Error>
where
    I: IntoIterator<Item = (&'a str, &'a [f64])>,
{
    let rows: Vec<(&str, &[f64])> = rows.into_iter().collect();
    let mut out = Vec::with_capacity(16 + rows.len() * (dim * 4 + 18));
    out.extend_from_slice(MAGIC);
    let dim32 = u32::try_from(dim).map_err(|_| Emb1Error::DimMismatch { expected: u32::MAX as usize, got: dim })?;
    out.extend_from_slice(&dim32.to_le_bytes());
    out.extend_from_slice(&(rows.len() as u64).to_le_bytes());
    for (id, values) in rows {
        if values.len() != dim {
            return Err(Emb1Error::DimMismatch { expected: dim, got: values.len() });
        }
        let id_len = u16::try_from(id.len()).map_err(|_| Emb1Error::IdTooLong(id.to_string()))?;
        out.extend_from_slice(&id_len.to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        for v in values {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn encode_matrix(matrix: &EmbeddingMatrix) -> Result<Vec<u8>, Emb1Error> {
    encode(matrix.dim(), matrix.rows())
}

/// An `--embeddings` argument: `embedder=path`, or a bare path whose
/// file stem names the embedder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingSpec {
    pub embedder_id: String,
    pub path: PathBuf,
}

impl EmbeddingSpec {
    pub fn parse(arg: &str) -> Result<Self, String> {
        if let Some((id, path)) = arg.split_once('=') {
            if id.is_empty() || path.is_empty() {
                return Err(format!("bad embeddings spec {arg:?}: expected embedder=path"));
            }
            return Ok(Self { embedder_id: id.into(), path: path.into() });
        }
        let path = PathBuf::from(arg);
        let stem = Path::new(arg).file_stem().and_then(|s| s.to_str()).filter(|s| !s.is_empty());
        let stem = stem.ok_or_else(|| format!("cannot derive an embedder id from {arg:?}"))?;
        Ok(Self { embedder_id: stem.into(), path })
    }
}
