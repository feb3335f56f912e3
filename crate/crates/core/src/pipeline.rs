//! End-to-end question answering and the batch evaluation drivers.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{load_corpus, AnalyzerConfig, Corpus, CorpusError, CorpusOptions};
use crate::embedding::{VectorError, WordVectors};
use crate::fusion::{
    fuse, rank_answers, top1_predictions, write_json, FusedAnswer, FusionConfig, FusionError,
};
use crate::metrics::{evaluate, retriever_recall, EvalReport, MetricsError, Prediction, QaExample};
use crate::readers::{
    AnswerCandidate, EmbeddingReader, ExternalReader, ExternalReaderConfig, RandomReader, Reader,
    ReaderError, SlidingWindowReader, TfidfReader,
};
use crate::retriever::{
    expand_to_paragraphs, load_external_hits, merge_external, retrieve_flat, retrieve_hierarchical,
    subselect_paragraphs, EmbeddingRetriever, HierarchicalConfig, ParagraphHit, RetrieverError,
};
use crate::tfidf::{load_index, IndexError, TfidfIndex};

pub const DEFAULT_BUDGET: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Retriever(#[from] RetrieverError),
    #[error(transparent)]
    Reader(#[from] ReaderError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot load word vectors: {0}")]
    Vectors(#[from] VectorError),
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
    #[error("cannot evaluate an empty dataset")]
    EmptyDataset,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReaderSpec {
    Tfidf,
    SlidingWindow,
    Random,
    Embedding {
        vectors: PathBuf,
    },
    External {
        command: Vec<String>,
        timeout: Duration,
    },
}

impl ReaderSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ReaderSpec::Tfidf => "tfidf",
            ReaderSpec::SlidingWindow => "sliding-window",
            ReaderSpec::Random => "random",
            ReaderSpec::Embedding { .. } => "embedding",
            ReaderSpec::External { .. } => "external",
        }
    }

    /// Instantiates the reader. `analyzer` configures the TF-IDF reader
    /// (its n-gram range is replaced by 1..4).
    pub fn build(
        &self,
        analyzer: &AnalyzerConfig,
        seed: u64,
        workers: usize,
    ) -> Result<Box<dyn Reader>, PipelineError> {
        Ok(match self {
            ReaderSpec::Tfidf => Box::new(TfidfReader::new(analyzer)),
            ReaderSpec::SlidingWindow => Box::new(SlidingWindowReader),
            ReaderSpec::Random => Box::new(RandomReader::new(seed)),
            ReaderSpec::Embedding { vectors } => {
                Box::new(EmbeddingReader::new(Arc::new(WordVectors::load(vectors)?)))
            }
            ReaderSpec::External { command, timeout } => Box::new(ExternalReader::new(
                ExternalReaderConfig {
                    timeout: *timeout,
                    ..ExternalReaderConfig::new(command.clone())
                },
                workers,
            )),
        })
    }
}

/// Settings shared by in-memory and file-backed pipelines.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub hierarchical: HierarchicalConfig,
    pub fusion: FusionConfig,
    /// Documents handed to the reader per question, external ones included.
    pub budget: usize,
    pub subselect: Option<usize>,
    pub workers: usize,
    pub external_hits: HashMap<String, Vec<String>>,
}

impl PipelineOptions {
    pub fn new(fusion: FusionConfig) -> Self {
        PipelineOptions {
            hierarchical: HierarchicalConfig::default(),
            fusion,
            budget: DEFAULT_BUDGET,
            subselect: None,
            workers: rayon::current_num_threads(),
            external_hits: HashMap::new(),
        }
    }
}

/// Everything needed to assemble a pipeline from files.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub index: PathBuf,
    pub corpus: PathBuf,
    pub hierarchical: HierarchicalConfig,
    pub reader: ReaderSpec,
    pub fusion: FusionConfig,
    pub external_hits: Option<PathBuf>,
    pub budget: usize,
    pub subselect: Option<usize>,
    pub workers: usize,
    pub seed: u64,
}

/// Ranked answers for one question.
#[derive(Debug, Clone, Serialize)]
pub struct QuestionAnswers {
    pub qid: String,
    pub answers: Vec<FusedAnswer>,
}

pub struct Pipeline {
    index: Arc<TfidfIndex>,
    corpus: Arc<Corpus>,
    reader: Box<dyn Reader>,
    opts: PipelineOptions,
}

impl Pipeline {
    pub fn new(
        index: Arc<TfidfIndex>,
        corpus: Arc<Corpus>,
        reader: Box<dyn Reader>,
        opts: PipelineOptions,
    ) -> Result<Self, PipelineError> {
        opts.hierarchical.validate()?;
        if opts.budget == 0 {
            return Err(PipelineError::Config("budget must be at least 1".into()));
        }
        if opts.subselect == Some(0) {
            return Err(PipelineError::Config(
                "subselect k must be at least 1".into(),
            ));
        }
        if index.ngram_range() != opts.hierarchical.stage1_ngrams {
            return Err(PipelineError::Config(format!(
                "index n-grams [{}] differ from stage-1 n-grams [{}]",
                index.ngram_range(),
                opts.hierarchical.stage1_ngrams
            )));
        }
        if let Some(missing) = index
            .doc_ids()
            .iter()
            .find(|d| !corpus.contains_doc(d, index.unit()))
        {
            return Err(PipelineError::Config(format!(
                "index document {missing:?} is not in the corpus"
            )));
        }
        Ok(Pipeline {
            index,
            corpus,
            reader,
            opts,
        })
    }

    pub fn from_config(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        let index = load_index(&cfg.index)?;
        let corpus = load_corpus(&cfg.corpus, CorpusOptions::default())?;
        let external_hits = match &cfg.external_hits {
            Some(p) => load_external_hits(p)?,
            None => HashMap::new(),
        };
        let reader = cfg
            .reader
            .build(index.analyzer_config(), cfg.seed, cfg.workers.max(1))?;
        let opts = PipelineOptions {
            hierarchical: cfg.hierarchical,
            fusion: cfg.fusion,
            budget: cfg.budget,
            subselect: cfg.subselect,
            workers: cfg.workers.max(1),
            external_hits,
        };
        Pipeline::new(Arc::new(index), Arc::new(corpus), reader, opts)
    }

    pub fn index(&self) -> &TfidfIndex {
        &self.index
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn options(&self) -> &PipelineOptions {
        &self.opts
    }

    /// Paragraphs that would be given to the reader.
    pub fn paragraphs(
        &self,
        qid: &str,
        question: &str,
    ) -> Result<Vec<ParagraphHit>, PipelineError> {
        let hits =
            retrieve_hierarchical(&self.index, &self.corpus, question, &self.opts.hierarchical)?;
        let external = self
            .opts
            .external_hits
            .get(qid)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let docs = merge_external(
            &hits,
            external,
            self.opts.budget,
            &self.corpus,
            self.index.unit(),
        );
        let mut paragraphs = expand_to_paragraphs(&docs, &self.corpus, self.index.unit())?;
        if let Some(k) = self.opts.subselect {
            paragraphs = subselect_paragraphs(
                &paragraphs,
                question,
                k,
                self.index.analyzer_config(),
                self.index.hash_bins(),
            )?;
        }
        Ok(paragraphs)
    }

    /// All reader candidates for a question, before fusion.
    pub fn candidates(
        &self,
        qid: &str,
        question: &str,
    ) -> Result<Vec<AnswerCandidate>, PipelineError> {
        let paragraphs = self.paragraphs(qid, question)?;
        if paragraphs.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.reader.read(qid, question, &paragraphs)?)
    }

    pub fn answer(&self, qid: &str, question: &str) -> Result<QuestionAnswers, PipelineError> {
        let fused = fuse(&self.candidates(qid, question)?, self.opts.fusion.beta)?;
        Ok(QuestionAnswers {
            qid: qid.to_string(),
            answers: rank_answers(&fused, self.opts.fusion.top_n),
        })
    }

    fn pool(&self) -> Result<rayon::ThreadPool, PipelineError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.opts.workers.max(1))
            .build()
            .map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Runs `answer` over the dataset; failing questions get no answers.
    pub fn answer_all(
        &self,
        examples: &[QaExample],
    ) -> Result<Vec<QuestionAnswers>, PipelineError> {
        let pool = self.pool()?;
        Ok(pool.install(|| {
            examples
                .par_iter()
                .map(|e| {
                    self.answer(&e.qid, &e.question).unwrap_or_else(|err| {
                        log::warn!("question {}: {err}", e.qid);
                        QuestionAnswers {
                            qid: e.qid.clone(),
                            answers: Vec::new(),
                        }
                    })
                })
                .collect()
        }))
    }

    /// Candidates for every question, for tuning β. Failing questions get none.
    pub fn collect_candidates(
        &self,
        examples: &[QaExample],
    ) -> Result<Vec<Vec<AnswerCandidate>>, PipelineError> {
        let pool = self.pool()?;
        Ok(pool.install(|| {
            examples
                .par_iter()
                .map(|e| {
                    self.candidates(&e.qid, &e.question).unwrap_or_else(|err| {
                        log::warn!("question {}: {err}", e.qid);
                        Vec::new()
                    })
                })
                .collect()
        }))
    }

    /// Open-domain evaluation: top-1 and top-n reports, optionally writing the
    /// two predictions files.
    pub fn evaluate_open_domain(
        &self,
        examples: &[QaExample],
        predictions_out: Option<(&Path, &Path)>,
    ) -> Result<OpenDomainReport, PipelineError> {
        if examples.is_empty() {
            return Err(PipelineError::EmptyDataset);
        }
        let answered = self.answer_all(examples)?;
        let texts: BTreeMap<String, Vec<String>> = answered
            .iter()
            .map(|q| {
                (
                    q.qid.clone(),
                    q.answers.iter().map(|a| a.candidate.text.clone()).collect(),
                )
            })
            .collect();
        let top1: HashMap<String, Vec<Prediction>> = texts
            .iter()
            .map(|(q, a)| {
                (
                    q.clone(),
                    a.first()
                        .map(|t| Prediction::text(t.as_str()))
                        .into_iter()
                        .collect(),
                )
            })
            .collect();
        let top_n: HashMap<String, Vec<Prediction>> = texts
            .iter()
            .map(|(q, a)| {
                (
                    q.clone(),
                    a.iter().map(|t| Prediction::text(t.as_str())).collect(),
                )
            })
            .collect();
        if let Some((top1_path, top_n_path)) = predictions_out {
            write_json(top1_path, &top1_predictions(&texts))?;
            write_json(top_n_path, &texts)?;
        }
        Ok(OpenDomainReport {
            top1: evaluate(examples, &top1, true)?,
            top_n: evaluate(examples, &top_n, true)?,
            top_n_size: self.opts.fusion.top_n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpenDomainReport {
    pub top1: EvalReport,
    pub top_n: EvalReport,
    pub top_n_size: usize,
}

/// Reader-only evaluation on gold paragraphs. Predictions carry their span, so
/// sentence match uses offsets.
pub fn evaluate_reader(
    examples: &[QaExample],
    reader: &dyn Reader,
    workers: usize,
) -> Result<(EvalReport, BTreeMap<String, String>), PipelineError> {
    if examples.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let best: Vec<Option<AnswerCandidate>> = pool.install(|| {
        examples
            .par_iter()
            .map(|e| {
                let p = ParagraphHit {
                    article_id: e.qid.clone(),
                    paragraph_index: 0,
                    text: e.context.clone(),
                    doc_score: 0.0,
                };
                match reader.read(&e.qid, &e.question, &[p]) {
                    Ok(c) => fuse(&c, 0.0)
                        .ok()
                        .and_then(|f| f.into_iter().next())
                        .map(|f| f.candidate),
                    Err(err) => {
                        log::warn!("question {}: {err}", e.qid);
                        None
                    }
                }
            })
            .collect()
    });
    let mut preds = HashMap::new();
    let mut file = BTreeMap::new();
    for (e, c) in examples.iter().zip(best) {
        let p: Vec<Prediction> = c
            .iter()
            .map(|c| Prediction::span(c.text.as_str(), c.char_start, c.char_end))
            .collect();
        file.insert(e.qid.clone(), c.map(|c| c.text).unwrap_or_default());
        preds.insert(e.qid.clone(), p);
    }
    Ok((evaluate(examples, &preds, true)?, file))
}

/// A retrieval method in a recall sweep.
pub enum RetrievalMethod<'a> {
    Flat {
        name: String,
        index: &'a TfidfIndex,
    },
    Hierarchical {
        name: String,
        index: &'a TfidfIndex,
        config: HierarchicalConfig,
    },
    Embedding {
        name: String,
        retriever: &'a EmbeddingRetriever,
        unit: crate::corpus::DocUnit,
    },
}

impl RetrievalMethod<'_> {
    pub fn name(&self) -> &str {
        match self {
            RetrievalMethod::Flat { name, .. }
            | RetrievalMethod::Hierarchical { name, .. }
            | RetrievalMethod::Embedding { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallRow {
    pub method: String,
    pub k: usize,
    pub recall: f64,
}

/// Recall@k for each method and k. Each method runs once at the largest k;
/// smaller k use prefixes of that ranking.
pub fn evaluate_retriever(
    examples: &[QaExample],
    corpus: &Corpus,
    methods: &[RetrievalMethod<'_>],
    ks: &[usize],
    raw_match: bool,
) -> Result<Vec<RecallRow>, PipelineError> {
    if examples.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    let Some(&k_max) = ks.iter().max() else {
        return Ok(Vec::new());
    };
    let mut rows = Vec::new();
    for method in methods {
        let ranked: Vec<Vec<String>> = examples
            .par_iter()
            .map(|e| -> Result<Vec<String>, PipelineError> {
                let (hits, unit) = match method {
                    RetrievalMethod::Flat { index, .. } => {
                        (retrieve_flat(index, &e.question, k_max), index.unit())
                    }
                    RetrievalMethod::Hierarchical { index, config, .. } => {
                        let cfg = HierarchicalConfig {
                            k2: k_max,
                            k1: config.k1.max(k_max),
                            ..*config
                        };
                        (
                            retrieve_hierarchical(index, corpus, &e.question, &cfg)?,
                            index.unit(),
                        )
                    }
                    RetrievalMethod::Embedding {
                        retriever, unit, ..
                    } => (retriever.retrieve(&e.question, k_max), *unit),
                };
                Ok(hits
                    .iter()
                    .filter_map(|h| corpus.document_text(&h.doc_id, unit))
                    .collect())
            })
            .collect::<Result<_, _>>()?;
        for &k in ks {
            let retrieved: HashMap<String, Vec<String>> = examples
                .iter()
                .zip(&ranked)
                .map(|(e, docs)| (e.qid.clone(), docs.iter().take(k).cloned().collect()))
                .collect();
            rows.push(RecallRow {
                method: method.name().to_string(),
                k,
                recall: retriever_recall(examples, &retrieved, raw_match),
            });
        }
    }
    Ok(rows)
}
