//! Hashed n-gram TF-IDF index with unit-normalized rows and exact cosine top-k.
//!
//! Rows are stored in compressed sparse row form (the persisted layout). A
//! column-major copy of the same weights is derived on build/load and used to
//! score queries by walking only the postings of the query's bins.

mod hashing;
mod persist;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Analyzer, AnalyzerConfig, DocUnit, NgramRange};

pub use hashing::{
    bin_counts, hash_ngram, hashed_ngrams, DEFAULT_HASH_BITS, HASH_SEED, MAX_HASH_BITS,
    MIN_HASH_BITS,
};
pub use persist::{
    load_index, load_index_checked, save_index, IndexWarning, FORMAT_VERSION, MAGIC,
};

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("cannot build an index over zero documents")]
    NoDocuments,
    #[error("hash bin count {0} must be a power of two between 2^10 and 2^31")]
    BadBinCount(u64),
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index format version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("index file is truncated")]
    Truncated,
    #[error("index checksum mismatch")]
    ChecksumMismatch,
    #[error("corrupt index: {0}")]
    Corrupt(String),
}

/// Sorted `(bin, weight)` pairs with positive weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pub entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.entries.len() && j < other.entries.len() {
            let (a, wa) = self.entries[i];
            let (b, wb) = other.entries[j];
            match a.cmp(&b) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += wa * wb;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalHit {
    pub doc_id: String,
    pub score: f64,
}

pub fn smooth_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

fn bits_for(hash_bins: u64) -> Result<u32, IndexError> {
    if !hash_bins.is_power_of_two() {
        return Err(IndexError::BadBinCount(hash_bins));
    }
    let bits = hash_bins.trailing_zeros();
    if !(MIN_HASH_BITS..=MAX_HASH_BITS).contains(&bits) {
        return Err(IndexError::BadBinCount(hash_bins));
    }
    Ok(bits)
}

#[derive(Debug, Clone)]
pub struct TfidfIndex {
    analyzer: Arc<Analyzer>,
    hash_bits: u32,
    unit: DocUnit,
    doc_ids: Vec<String>,
    row_offsets: Vec<usize>,
    columns: Vec<u32>,
    weights: Vec<f64>,
    /// Bins with non-zero document frequency, ascending.
    vocab: Vec<u32>,
    /// idf of each `vocab` bin.
    idf: Vec<f64>,
    post_offsets: Vec<usize>,
    post_rows: Vec<u32>,
    post_weights: Vec<f64>,
}

/// Builds a [`TfidfIndex`] with an explicit unit and bin count.
#[derive(Debug, Clone)]
pub struct IndexBuilder {
    analyzer: Arc<Analyzer>,
    hash_bins: u64,
    unit: DocUnit,
    warn_empty: bool,
}

impl IndexBuilder {
    pub fn new(cfg: &AnalyzerConfig) -> Self {
        Self::with_analyzer(Arc::new(Analyzer::new(cfg.clone())))
    }

    pub fn with_analyzer(analyzer: Arc<Analyzer>) -> Self {
        IndexBuilder {
            analyzer,
            hash_bins: 1 << DEFAULT_HASH_BITS,
            unit: DocUnit::Article,
            warn_empty: true,
        }
    }

    pub fn hash_bins(mut self, bins: u64) -> Self {
        self.hash_bins = bins;
        self
    }

    pub fn unit(mut self, unit: DocUnit) -> Self {
        self.unit = unit;
        self
    }

    /// Suppresses the empty-document warning (for per-question indexes).
    pub fn quiet(mut self) -> Self {
        self.warn_empty = false;
        self
    }

    pub fn build<I, S, T>(&self, docs: I) -> Result<TfidfIndex, IndexError>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: AsRef<str> + Sync,
    {
        let bits = bits_for(self.hash_bins)?;
        let (doc_ids, texts): (Vec<String>, Vec<T>) =
            docs.into_iter().map(|(id, t)| (id.into(), t)).unzip();
        if doc_ids.is_empty() {
            return Err(IndexError::NoDocuments);
        }
        let mask = self.hash_bins - 1;
        let range = self.analyzer.ngram_range();
        let analyzer = &self.analyzer;
        let rows: Vec<Vec<(u32, u32)>> = texts
            .par_iter()
            .map(|t| bin_counts(hashed_ngrams(&analyzer.analyze(t.as_ref()), range, mask)))
            .collect();

        let empty = rows.iter().filter(|r| r.is_empty()).count();
        if empty > 0 && self.warn_empty {
            let first = rows
                .iter()
                .position(Vec::is_empty)
                .map(|i| doc_ids[i].as_str())
                .unwrap_or("");
            log::warn!(
                "{empty} document(s) produced no features and will never match (first: {first:?})"
            );
        }

        let mut all_bins: Vec<u32> = rows
            .iter()
            .flat_map(|r| r.iter().map(|&(b, _)| b))
            .collect();
        all_bins.sort_unstable();
        let mut vocab = Vec::new();
        let mut df = Vec::new();
        for b in all_bins {
            if vocab.last() == Some(&b) {
                *df.last_mut().unwrap() += 1;
            } else {
                vocab.push(b);
                df.push(1usize);
            }
        }
        let n = doc_ids.len();
        let idf: Vec<f64> = df.iter().map(|&d| smooth_idf(n, d)).collect();

        let weighted: Vec<Vec<(u32, f64)>> = rows
            .par_iter()
            .map(|row| {
                let mut w: Vec<(u32, f64)> = row
                    .iter()
                    .map(|&(b, tf)| {
                        let slot = vocab.binary_search(&b).expect("bin counted in df");
                        (b, tf as f64 * idf[slot])
                    })
                    .collect();
                normalize(&mut w);
                w
            })
            .collect();

        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        let nnz: usize = weighted.iter().map(Vec::len).sum();
        let mut columns = Vec::with_capacity(nnz);
        let mut weights = Vec::with_capacity(nnz);
        for row in weighted {
            for (b, w) in row {
                columns.push(b);
                weights.push(w);
            }
            row_offsets.push(columns.len());
        }
        Ok(TfidfIndex::assemble(
            self.analyzer.clone(),
            bits,
            self.unit,
            doc_ids,
            row_offsets,
            columns,
            weights,
            vocab,
            idf,
        ))
    }
}

fn normalize(entries: &mut [(u32, f64)]) {
    let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in entries.iter_mut() {
            *w /= norm;
        }
    }
}

/// Builds an article-unit index with `hash_bins` bins.
pub fn build_index<I, S, T>(
    docs: I,
    cfg: &AnalyzerConfig,
    hash_bins: u64,
) -> Result<TfidfIndex, IndexError>
where
    I: IntoIterator<Item = (S, T)>,
    S: Into<String>,
    T: AsRef<str> + Sync,
{
    IndexBuilder::new(cfg).hash_bins(hash_bins).build(docs)
}

impl TfidfIndex {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        analyzer: Arc<Analyzer>,
        hash_bits: u32,
        unit: DocUnit,
        doc_ids: Vec<String>,
        row_offsets: Vec<usize>,
        columns: Vec<u32>,
        weights: Vec<f64>,
        vocab: Vec<u32>,
        idf: Vec<f64>,
    ) -> Self {
        let mut counts = vec![0usize; vocab.len() + 1];
        let slots: Vec<usize> = columns
            .iter()
            .map(|b| vocab.binary_search(b).expect("column in vocabulary"))
            .collect();
        for &s in &slots {
            counts[s + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let post_offsets = counts.clone();
        let mut cursor = counts;
        let mut post_rows = vec![0u32; columns.len()];
        let mut post_weights = vec![0f64; columns.len()];
        for row in 0..doc_ids.len() {
            for k in row_offsets[row]..row_offsets[row + 1] {
                let s = slots[k];
                post_rows[cursor[s]] = row as u32;
                post_weights[cursor[s]] = weights[k];
                cursor[s] += 1;
            }
        }
        TfidfIndex {
            analyzer,
            hash_bits,
            unit,
            doc_ids,
            row_offsets,
            columns,
            weights,
            vocab,
            idf,
            post_offsets,
            post_rows,
            post_weights,
        }
    }

    pub fn analyzer(&self) -> &Arc<Analyzer> {
        &self.analyzer
    }

    pub fn analyzer_config(&self) -> &AnalyzerConfig {
        self.analyzer.config()
    }

    pub fn ngram_range(&self) -> NgramRange {
        self.analyzer.ngram_range()
    }

    pub fn hash_bins(&self) -> u64 {
        1 << self.hash_bits
    }

    fn mask(&self) -> u64 {
        self.hash_bins() - 1
    }

    pub fn unit(&self) -> DocUnit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.columns.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_id(&self, row: usize) -> &str {
        &self.doc_ids[row]
    }

    /// Stored (normalized) row of a document.
    pub fn row(&self, row: usize) -> SparseVector {
        let r = self.row_offsets[row]..self.row_offsets[row + 1];
        SparseVector {
            entries: self.columns[r.clone()]
                .iter()
                .copied()
                .zip(self.weights[r].iter().copied())
                .collect(),
        }
    }

    /// idf of a bin; `None` for bins no document contains.
    pub fn idf(&self, bin: u32) -> Option<f64> {
        self.vocab.binary_search(&bin).ok().map(|s| self.idf[s])
    }

    /// Hashes, weights and normalizes a question against this index's
    /// vocabulary. Bins absent from every document are dropped.
    pub fn vectorize_query(&self, question: &str) -> SparseVector {
        let stream = self.analyzer.analyze(question);
        let counts = bin_counts(hashed_ngrams(&stream, self.ngram_range(), self.mask()));
        let mut entries: Vec<(u32, f64)> = counts
            .into_iter()
            .filter_map(|(b, tf)| self.idf(b).map(|idf| (b, tf as f64 * idf)))
            .collect();
        normalize(&mut entries);
        SparseVector { entries }
    }

    /// Like [`vectorize_query`](Self::vectorize_query), but bins no document
    /// contains keep the zero-df idf. The question's norm then does not depend
    /// on the collection, so scores from different indexes stay comparable.
    pub fn vectorize_query_full(&self, question: &str) -> SparseVector {
        let stream = self.analyzer.analyze(question);
        let counts = bin_counts(hashed_ngrams(&stream, self.ngram_range(), self.mask()));
        let unseen = smooth_idf(self.len(), 0);
        let mut entries: Vec<(u32, f64)> = counts
            .into_iter()
            .map(|(b, tf)| (b, tf as f64 * self.idf(b).unwrap_or(unseen)))
            .collect();
        normalize(&mut entries);
        SparseVector { entries }
    }

    /// Cosine of `q` against every row.
    pub fn score_all(&self, q: &SparseVector) -> Vec<f64> {
        let mut scores = vec![0.0; self.len()];
        for &(bin, qw) in &q.entries {
            if let Ok(slot) = self.vocab.binary_search(&bin) {
                let r = self.post_offsets[slot]..self.post_offsets[slot + 1];
                for (&row, &dw) in self.post_rows[r.clone()].iter().zip(&self.post_weights[r]) {
                    scores[row as usize] += qw * dw;
                }
            }
        }
        for s in &mut scores {
            *s = s.min(1.0);
        }
        scores
    }

    /// Best `k` rows with positive score as `(row, score)`, score descending,
    /// ties by ascending row.
    pub fn top_k_rows(&self, q: &SparseVector, k: usize) -> Vec<(usize, f64)> {
        if q.is_empty() || k == 0 {
            return Vec::new();
        }
        let mut hits: Vec<(usize, f64)> = self
            .score_all(q)
            .into_iter()
            .enumerate()
            .filter(|&(_, s)| s > 0.0)
            .collect();
        let cmp = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, cmp);
            hits.truncate(k);
        }
        hits.sort_unstable_by(cmp);
        hits
    }

    pub fn top_k(&self, q: &SparseVector, k: usize) -> Vec<RetrievalHit> {
        self.top_k_rows(q, k)
            .into_iter()
            .map(|(row, score)| RetrievalHit {
                doc_id: self.doc_ids[row].clone(),
                score,
            })
            .collect()
    }
}
