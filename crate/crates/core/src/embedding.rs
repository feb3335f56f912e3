//! Pre-trained word vectors in the plain-text interchange format.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::corpus::text::normalize_chars;

#[derive(Debug, thiserror::Error)]
pub enum VectorError {
    #[error("cannot read vectors: {0}")]
    Io(#[from] std::io::Error),
    #[error("vector file line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Word → dense vector table. Keys are stored in normalized form.
#[derive(Debug, Clone)]
pub struct WordVectors {
    dim: usize,
    table: HashMap<String, Vec<f32>>,
}

impl WordVectors {
    pub fn new(dim: usize) -> Self {
        WordVectors {
            dim,
            table: HashMap::new(),
        }
    }

    /// Adds a vector unless the normalized word is already present.
    pub fn insert(&mut self, word: &str, vector: Vec<f32>) {
        assert_eq!(vector.len(), self.dim, "vector dimension");
        self.table.entry(normalize_chars(word)).or_insert(vector);
    }

    /// Parses a header line `count dim` followed by `word v1 .. vdim` lines.
    pub fn read(input: impl Read) -> Result<Self, VectorError> {
        let mut lines = BufReader::new(input).lines();
        let bad = |line: usize, message: String| VectorError::Malformed { line, message };
        let header = lines
            .next()
            .ok_or_else(|| bad(1, "missing header".into()))??;
        let mut parts = header.split_whitespace();
        let (count, dim) = match (parts.next(), parts.next(), parts.next()) {
            (Some(c), Some(d), None) => (
                c.parse::<usize>()
                    .map_err(|e| bad(1, format!("count: {e}")))?,
                d.parse::<usize>()
                    .map_err(|e| bad(1, format!("dim: {e}")))?,
            ),
            _ => return Err(bad(1, format!("expected `count dim`, got {header:?}"))),
        };
        if dim == 0 {
            return Err(bad(1, "dimension must be positive".into()));
        }
        let mut vectors = WordVectors::new(dim);
        let mut seen = 0;
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-empty line");
            let values = fields
                .map(|f| {
                    f.parse::<f32>()
                        .map_err(|e| bad(lineno, format!("{f:?}: {e}")))
                })
                .collect::<Result<Vec<f32>, _>>()?;
            if values.len() != dim {
                return Err(bad(
                    lineno,
                    format!("expected {dim} values, got {}", values.len()),
                ));
            }
            vectors.insert(word, values);
            seen += 1;
        }
        if seen != count {
            log::warn!("vector header announces {count} words, file has {seen}");
        }
        Ok(vectors)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, VectorError> {
        Self::read(std::fs::File::open(path)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.table.get(word).map(Vec::as_slice)
    }

    /// Sum of the vectors of already-normalized `words`; unknown words add nothing.
    pub fn sum<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> Vec<f32> {
        let mut acc = vec![0f32; self.dim];
        for w in words {
            if let Some(v) = self.get(w) {
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += x;
                }
            }
        }
        acc
    }
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}
