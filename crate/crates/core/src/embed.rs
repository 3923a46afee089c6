//! Dense embedding matrices and word-vector tables.
//!
//! Vectors arrive as 32-bit floats and are widened to `f64` on load;
//! all dot products, norms and centroid sums run in `f64`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Unit-norm tolerance accepted by [`cosine_distance`].
pub const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("non-finite component in vector {0:?}")]
    NonFiniteValue(String),
    #[error("zero vector for {0:?}")]
    ZeroVector(String),
    #[error("vector is not unit norm (norm {0})")]
    NormViolation(f64),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("word-vector vocabulary is empty")]
    EmptyVocabulary,
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

/// `v / |v|`, or `None` for a zero vector.
pub fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let norm = l2_norm(v);
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| x / norm).collect())
}

/// `1 - u.v` for unit vectors, checked.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64, EmbedError> {
    if u.len() != v.len() {
        return Err(EmbedError::DimMismatch { expected: u.len(), got: v.len() });
    }
    for w in [u, v] {
        let norm = l2_norm(w);
        if libm::fabs(norm - 1.0) > UNIT_TOLERANCE {
            return Err(EmbedError::NormViolation(norm));
        }
    }
    Ok(unit_distance(u, v))
}

/// `1 - u.v` without the norm check; callers guarantee unit inputs.
#[inline]
pub fn unit_distance(u: &[f64], v: &[f64]) -> f64 {
    1.0 - dot(u, v)
}

/// Row-major matrix of embeddings keyed by record id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    embedder_id: String,
    dim: usize,
    ids: Vec<String>,
    values: Vec<f64>,
    index: BTreeMap<String, usize>,
}

impl EmbeddingMatrix {
    pub fn new(embedder_id: impl Into<String>, dim: usize) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::ZeroDimension);
        }
        Ok(Self { embedder_id: embedder_id.into(), dim, ids: Vec::new(), values: Vec::new(), index: BTreeMap::new() })
    }

    pub fn push(&mut self, id: impl Into<String>, vector: &[f64]) -> Result<(), EmbedError> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(EmbedError::DimMismatch { expected: self.dim, got: vector.len() });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::NonFiniteValue(id));
        }
        if self.index.contains_key(&id) {
            return Err(EmbedError::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.values.extend_from_slice(vector);
        Ok(())
    }

    pub fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids.iter().map(String::as_str).zip(self.values.chunks_exact(self.dim))
    }

    /// Every vector rescaled to unit L2 norm. Zero vectors are an error:
    /// they signal an upstream embedding failure.
    pub fn normalize(&self) -> Result<EmbeddingMatrix, EmbedError> {
        let mut out = EmbeddingMatrix::new(self.embedder_id.clone(), self.dim)?;
        for (id, row) in self.rows() {
            let u = unit(row).ok_or_else(|| EmbedError::ZeroVector(id.to_string()))?;
            out.push(id, &u)?;
        }
        Ok(out)
    }

    /// Ids with no counterpart in `known`.
    pub fn unresolved_ids<'a>(&'a self, known: &dyn Fn(&str) -> bool) -> Vec<&'a str> {
        self.ids.iter().map(String::as_str).filter(|id| !known(id)).collect()
    }
}

/// Token to vector table for word-level similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    vocab: BTreeMap<String, Vec<f64>>,
}

impl WordVectorTable {
    pub fn new(dim: usize) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::ZeroDimension);
        }
        Ok(Self { dim, vocab: BTreeMap::new() })
    }

    /// Inserts or replaces a token's vector.
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<(), EmbedError> {
        let token = token.into();
        if vector.len() != self.dim {
            return Err(EmbedError::DimMismatch { expected: self.dim, got: vector.len() });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::NonFiniteValue(token));
        }
        self.vocab.insert(token, vector);
        Ok(())
    }

    /// Fails if the table ended up empty.
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.vocab.is_empty() {
            return Err(EmbedError::EmptyVocabulary);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vocab.get(token).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vocab.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn normalize_examples() {
        let mut m = EmbeddingMatrix::new("e", 2).unwrap();
        m.push("a", &[3.0, 4.0]).unwrap();
        m.push("b", &[0.6, 0.8]).unwrap();
        let n = m.normalize().unwrap();
        assert!((n.row(0)[0] - 0.6).abs() < 1e-15 && (n.row(0)[1] - 0.8).abs() < 1e-15);
        assert!((n.row(1)[0] - 0.6).abs() < 1e-12 && (n.row(1)[1] - 0.8).abs() < 1e-12);

        let mut z = EmbeddingMatrix::new("e", 2).unwrap();
        z.push("zero", &[0.0, 0.0]).unwrap();
        assert_eq!(z.normalize(), Err(EmbedError::ZeroVector("zero".into())));
    }

    #[test]
    fn push_validation() {
        let mut m = EmbeddingMatrix::new("e", 3).unwrap();
        assert_eq!(m.push("a", &[1.0, 2.0]), Err(EmbedError::DimMismatch { expected: 3, got: 2 }));
        assert_eq!(m.push("a", &[1.0, f64::NAN, 0.0]), Err(EmbedError::NonFiniteValue("a".into())));
        m.push("a", &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(m.push("a", &[1.0, 0.0, 0.0]), Err(EmbedError::DuplicateId("a".into())));
        assert_eq!(EmbeddingMatrix::new("e", 0).unwrap_err(), EmbedError::ZeroDimension);
        assert_eq!(m.get("a"), Some(&[1.0, 0.0, 0.0][..]));
    }

    #[test]
    fn cosine_distance_examples() {
        let u = [1.0, 0.0];
        assert_eq!(cosine_distance(&u, &u).unwrap(), 0.0);
        assert_eq!(cosine_distance(&u, &[-1.0, 0.0]).unwrap(), 2.0);
        assert_eq!(cosine_distance(&u, &[0.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(cosine_distance(&u, &[2.0, 0.0]), Err(EmbedError::NormViolation(_))));
    }

    #[test]
    fn word_vectors() {
        let mut t = WordVectorTable::new(2).unwrap();
        assert_eq!(t.validate(), Err(EmbedError::EmptyVocabulary));
        t.insert("cat", vec![1.0, 0.0]).unwrap();
        assert!(t.insert("dog", vec![1.0]).is_err());
        assert!(t.validate().is_ok());
        assert_eq!(t.get("cat"), Some(&[1.0, 0.0][..]));
    }
}
