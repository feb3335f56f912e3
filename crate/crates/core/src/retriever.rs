//! Flat and hierarchical document retrieval, paragraph expansion, merging with
//! externally retrieved lists and 4-gram paragraph sub-selection.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    parse_paragraph_doc_id, Analyzer, AnalyzerConfig, Corpus, DocUnit, NgramRange,
};
use crate::embedding::WordVectors;
use crate::tfidf::{IndexBuilder, IndexError, RetrievalHit, TfidfIndex};

#[derive(Debug, thiserror::Error)]
pub enum RetrieverError {
    #[error("document {0:?} is not in the corpus")]
    UnknownDocument(String),
    #[error("stage-1 index uses n-grams [{found}] but the configuration asks for [{expected}]")]
    StageMismatch {
        expected: NgramRange,
        found: NgramRange,
    },
    #[error("invalid hierarchical configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("external hits file line {line}: {message}")]
    ExternalFile { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Two-stage retrieval: a coarse pass over the whole collection keeps `k1`
/// documents, a per-question index over those keeps `k2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchicalConfig {
    pub stage1_ngrams: NgramRange,
    pub k1: usize,
    pub stage2_ngrams: NgramRange,
    pub k2: usize,
}

impl Default for HierarchicalConfig {
    fn default() -> Self {
        HierarchicalConfig {
            stage1_ngrams: NgramRange::BIGRAM,
            k1: 1000,
            stage2_ngrams: NgramRange::FOURGRAM,
            k2: 15,
        }
    }
}

impl HierarchicalConfig {
    pub fn validate(&self) -> Result<(), RetrieverError> {
        if self.k2 == 0 || self.k1 < self.k2 {
            return Err(RetrieverError::BadConfig(format!(
                "need 1 <= k2 <= k1, got k1={} k2={}",
                self.k1, self.k2
            )));
        }
        Ok(())
    }
}

/// A paragraph to be read, carrying the score of the document it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParagraphHit {
    pub article_id: String,
    pub paragraph_index: usize,
    pub text: String,
    pub doc_score: f64,
}

impl ParagraphHit {
    pub fn id(&self) -> String {
        crate::corpus::paragraph_doc_id(&self.article_id, self.paragraph_index)
    }
}

pub fn retrieve_flat(index: &TfidfIndex, question: &str, k: usize) -> Vec<RetrievalHit> {
    index.top_k(&index.vectorize_query(question), k)
}

pub fn retrieve_hierarchical(
    stage1: &TfidfIndex,
    corpus: &Corpus,
    question: &str,
    cfg: &HierarchicalConfig,
) -> Result<Vec<RetrievalHit>, RetrieverError> {
    cfg.validate()?;
    if stage1.ngram_range() != cfg.stage1_ngrams {
        return Err(RetrieverError::StageMismatch {
            expected: cfg.stage1_ngrams,
            found: stage1.ngram_range(),
        });
    }
    let positive = stage1.top_k_rows(&stage1.vectorize_query(question), cfg.k1);
    if positive.is_empty() {
        return Ok(Vec::new());
    }
    // D' is the top-k1 ranking; when fewer than k1 documents score above zero
    // the ranking continues with zero-score documents in row order. Rows keep
    // their stage-1 order inside the transient index.
    let mut rows: BTreeSet<usize> = positive.iter().map(|&(r, _)| r).collect();
    let mut next = 0;
    while rows.len() < cfg.k1 && next < stage1.len() {
        rows.insert(next);
        next += 1;
    }
    let unit = stage1.unit();
    let docs = rows
        .into_iter()
        .map(|r| {
            let id = stage1.doc_id(r);
            corpus
                .document_text(id, unit)
                .map(|t| (id.to_string(), t))
                .ok_or_else(|| RetrieverError::UnknownDocument(id.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let analyzer = Analyzer::new(
        stage1
            .analyzer_config()
            .clone()
            .with_ngrams(cfg.stage2_ngrams),
    );
    let stage2 = IndexBuilder::with_analyzer(Arc::new(analyzer))
        .hash_bins(stage1.hash_bins())
        .unit(unit)
        .quiet()
        .build(docs)?;
    Ok(retrieve_flat(&stage2, question, cfg.k2))
}

/// Fans article hits out to their paragraphs; paragraph hits pass through.
pub fn expand_to_paragraphs(
    hits: &[RetrievalHit],
    corpus: &Corpus,
    unit: DocUnit,
) -> Result<Vec<ParagraphHit>, RetrieverError> {
    let mut out = Vec::new();
    for hit in hits {
        let unknown = || RetrieverError::UnknownDocument(hit.doc_id.clone());
        match unit {
            DocUnit::Article => {
                let article = corpus.article(&hit.doc_id).ok_or_else(unknown)?;
                out.extend(article.paragraphs.iter().map(|p| ParagraphHit {
                    article_id: article.id.clone(),
                    paragraph_index: p.index,
                    text: p.text.clone(),
                    doc_score: hit.score,
                }));
            }
            DocUnit::Paragraph => {
                let (a, i) = parse_paragraph_doc_id(&hit.doc_id).ok_or_else(unknown)?;
                let p = corpus.paragraph(a, i).ok_or_else(unknown)?;
                out.push(ParagraphHit {
                    article_id: p.article_id.clone(),
                    paragraph_index: p.index,
                    text: p.text.clone(),
                    doc_score: hit.score,
                });
            }
        }
    }
    Ok(out)
}

/// Primary hits first (deduplicated, truncated to `budget`), then external ids
/// not yet present until `budget` is reached. External documents score the
/// minimum kept primary score, or 0 when there is none.
pub fn merge_external(
    primary: &[RetrievalHit],
    external: &[String],
    budget: usize,
    corpus: &Corpus,
    unit: DocUnit,
) -> Vec<RetrievalHit> {
    let mut seen = HashSet::new();
    let mut out: Vec<RetrievalHit> = Vec::new();
    for hit in primary {
        if out.len() == budget {
            break;
        }
        if seen.insert(hit.doc_id.as_str()) {
            out.push(hit.clone());
        }
    }
    let floor = out
        .iter()
        .map(|h| h.score)
        .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.min(s))));
    let floor = floor.unwrap_or(0.0);
    let mut appended = Vec::new();
    for id in external {
        if out.len() + appended.len() >= budget {
            break;
        }
        if seen.contains(id.as_str()) {
            continue;
        }
        if !corpus.contains_doc(id, unit) {
            log::warn!("external document {id:?} not in corpus; skipped");
            continue;
        }
        seen.insert(id.as_str());
        appended.push(RetrievalHit {
            doc_id: id.clone(),
            score: floor,
        });
    }
    out.extend(appended);
    out
}

/// Keeps the `k` paragraphs closest to the question under a transient 4-gram
/// TF-IDF index; `doc_score` becomes that paragraph-level cosine.
pub fn subselect_paragraphs(
    hits: &[ParagraphHit],
    question: &str,
    k: usize,
    analyzer_cfg: &AnalyzerConfig,
    hash_bins: u64,
) -> Result<Vec<ParagraphHit>, RetrieverError> {
    if hits.is_empty() {
        return Ok(Vec::new());
    }
    let analyzer = Analyzer::new(analyzer_cfg.clone().with_ngrams(NgramRange::FOURGRAM));
    let index = IndexBuilder::with_analyzer(Arc::new(analyzer))
        .hash_bins(hash_bins)
        .quiet()
        .build(
            hits.iter()
                .enumerate()
                .map(|(i, h)| (i.to_string(), h.text.as_str())),
        )?;
    Ok(index
        .top_k_rows(&index.vectorize_query(question), k)
        .into_iter()
        .map(|(row, score)| ParagraphHit {
            doc_score: score,
            ..hits[row].clone()
        })
        .collect())
}

#[derive(Deserialize)]
struct ExternalLine {
    qid: String,
    doc_ids: Vec<String>,
}

/// Reads `{"qid", "doc_ids"}` lines of externally retrieved documents.
pub fn load_external_hits(
    path: impl AsRef<Path>,
) -> Result<HashMap<String, Vec<String>>, RetrieverError> {
    let path = path.as_ref();
    let io = |source| RetrieverError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut out = HashMap::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ExternalLine =
            serde_json::from_str(&line).map_err(|e| RetrieverError::ExternalFile {
                line: i + 1,
                message: e.to_string(),
            })?;
        out.insert(parsed.qid, parsed.doc_ids);
    }
    Ok(out)
}

/// Baseline retriever scoring each document by the cosine between the sums of
/// its word vectors and the question's.
pub struct EmbeddingRetriever {
    vectors: Arc<WordVectors>,
    doc_ids: Vec<String>,
    docs: Vec<Vec<f32>>,
}

impl EmbeddingRetriever {
    pub fn build(corpus: &Corpus, unit: DocUnit, vectors: Arc<WordVectors>) -> Self {
        let analyzer = Analyzer::new(AnalyzerConfig::surface());
        let (doc_ids, docs) = corpus
            .documents(unit)
            .into_iter()
            .map(|(id, text)| {
                let toks = analyzer.analyze(&text);
                (id, vectors.sum(toks.stems()))
            })
            .unzip();
        EmbeddingRetriever {
            vectors,
            doc_ids,
            docs,
        }
    }

    pub fn retrieve(&self, question: &str, k: usize) -> Vec<RetrievalHit> {
        let analyzer = Analyzer::new(AnalyzerConfig::surface());
        let q = self.vectors.sum(analyzer.analyze(question).stems());
        let mut scored: Vec<(usize, f64)> = self
            .docs
            .iter()
            .enumerate()
            .map(|(i, d)| (i, crate::embedding::cosine(d, &q)))
            .filter(|&(_, s)| s > 0.0)
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        scored
            .into_iter()
            .map(|(i, score)| RetrievalHit {
                doc_id: self.doc_ids[i].clone(),
                score,
            })
            .collect()
    }
}
