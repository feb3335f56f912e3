use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    candidate_spans, first_argmax, words, AnswerCandidate, Reader, ReaderError,
    MAX_CANDIDATE_TOKENS,
};
use crate::corpus::{Analyzer, AnalyzerConfig, NgramRange};
use crate::embedding::{cosine, WordVectors};
use crate::retriever::ParagraphHit;
use crate::tfidf::{IndexBuilder, DEFAULT_HASH_BITS};

/// Picks one candidate per paragraph uniformly at random. The generator is
/// seeded from the configured seed and the question text, so output does not
/// depend on the order questions are processed in.
#[derive(Debug, Clone)]
pub struct RandomReader {
    seed: u64,
}

impl RandomReader {
    pub fn new(seed: u64) -> Self {
        RandomReader { seed }
    }
}

impl Reader for RandomReader {
    fn name(&self) -> &'static str {
        "random"
    }

    fn read(
        &self,
        _qid: &str,
        question: &str,
        paragraphs: &[ParagraphHit],
    ) -> Result<Vec<AnswerCandidate>, ReaderError> {
        let mixed = self.seed ^ xxhash_rust::xxh64::xxh64(question.as_bytes(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(mixed);
        let mut out = Vec::new();
        for p in paragraphs {
            let spans = candidate_spans(&p.text, &words(&p.text), MAX_CANDIDATE_TOKENS);
            if spans.is_empty() {
                continue;
            }
            let pick = spans[rng.random_range(0..spans.len())];
            let score: f64 = rng.sample(Open01);
            out.push(AnswerCandidate::from_span(p, pick.start, pick.end, score));
        }
        Ok(out)
    }
}

/// Sliding-window overlap minus normalized question/answer distance, over the
/// word sequence `passage`.
///
/// `answer` holds the candidate's words. Returns `(sw, dist)`.
pub fn sliding_window_score(
    passage: &[&str],
    question: &HashSet<&str>,
    answer: &[&str],
) -> (f64, f64) {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for w in passage {
        *counts.entry(w).or_default() += 1;
    }
    let ic: Vec<f64> = passage
        .iter()
        .map(|w| (1.0 + 1.0 / counts[w] as f64).ln())
        .collect();
    score_with_ic(passage, &ic, question, answer)
}

fn score_with_ic(
    passage: &[&str],
    ic: &[f64],
    question: &HashSet<&str>,
    answer: &[&str],
) -> (f64, f64) {
    let answer_set: HashSet<&str> = answer.iter().copied().collect();
    let target: HashSet<&str> = answer_set.union(question).copied().collect();
    let width = target.len();

    let hits: Vec<f64> = passage
        .iter()
        .zip(ic)
        .map(|(w, &c)| if target.contains(w) { c } else { 0.0 })
        .collect();
    let last_start = passage.len().saturating_sub(width);
    let sw = if passage.is_empty() || width == 0 {
        0.0
    } else {
        (0..=last_start)
            .map(|j| hits[j..(j + width).min(passage.len())].iter().sum::<f64>())
            .fold(0.0, f64::max)
    };

    let dist = if passage.len() < 2 {
        0.0
    } else {
        let q_pos: Vec<usize> = (0..passage.len())
            .filter(|&i| question.contains(passage[i]))
            .collect();
        let a_pos: Vec<usize> = (0..passage.len())
            .filter(|&i| answer_set.contains(passage[i]))
            .collect();
        if q_pos.is_empty() || a_pos.is_empty() {
            1.0
        } else {
            let (mut i, mut j, mut best) = (0, 0, usize::MAX);
            while i < q_pos.len() && j < a_pos.len() {
                best = best.min(q_pos[i].abs_diff(a_pos[j]));
                if q_pos[i] < a_pos[j] {
                    i += 1;
                } else {
                    j += 1;
                }
            }
            best as f64 / (passage.len() - 1) as f64
        }
    };
    (sw, dist)
}

/// Word-overlap baseline: `ans_raw = sw - dist` (see [`sliding_window_score`]).
#[derive(Debug, Clone, Default)]
pub struct SlidingWindowReader;

impl Reader for SlidingWindowReader {
    fn name(&self) -> &'static str {
        "sliding-window"
    }

    fn read(
        &self,
        _qid: &str,
        question: &str,
        paragraphs: &[ParagraphHit],
    ) -> Result<Vec<AnswerCandidate>, ReaderError> {
        let q_tokens = words(question);
        let q_set: HashSet<&str> = q_tokens.iter().map(|t| t.stem.as_str()).collect();
        let mut out = Vec::new();
        for p in paragraphs {
            let tokens = words(&p.text);
            let spans = candidate_spans(&p.text, &tokens, MAX_CANDIDATE_TOKENS);
            let passage: Vec<&str> = tokens.iter().map(|t| t.stem.as_str()).collect();
            let mut counts: HashMap<&str, usize> = HashMap::new();
            for w in &passage {
                *counts.entry(w).or_default() += 1;
            }
            let ic: Vec<f64> = passage
                .iter()
                .map(|w| (1.0 + 1.0 / counts[w] as f64).ln())
                .collect();
            let scores = spans.iter().map(|s| {
                let (sw, dist) = score_with_ic(&passage, &ic, &q_set, &passage[s.first..=s.last]);
                sw - dist
            });
            if let Some((i, score)) = first_argmax(scores) {
                out.push(AnswerCandidate::from_span(
                    p,
                    spans[i].start,
                    spans[i].end,
                    score,
                ));
            }
        }
        Ok(out)
    }
}

/// Treats each candidate span as a document of a transient 4-gram TF-IDF
/// index and keeps the one closest to the question.
#[derive(Debug, Clone)]
pub struct TfidfReader {
    analyzer: Arc<Analyzer>,
    hash_bins: u64,
}

impl TfidfReader {
    pub fn new(cfg: &AnalyzerConfig) -> Self {
        TfidfReader {
            analyzer: Arc::new(Analyzer::new(cfg.clone().with_ngrams(NgramRange::FOURGRAM))),
            hash_bins: 1 << DEFAULT_HASH_BITS,
        }
    }
}

impl Default for TfidfReader {
    fn default() -> Self {
        TfidfReader::new(&AnalyzerConfig::default())
    }
}

impl Reader for TfidfReader {
    fn name(&self) -> &'static str {
        "tfidf"
    }

    fn read(
        &self,
        _qid: &str,
        question: &str,
        paragraphs: &[ParagraphHit],
    ) -> Result<Vec<AnswerCandidate>, ReaderError> {
        let builder = IndexBuilder::with_analyzer(self.analyzer.clone())
            .hash_bins(self.hash_bins)
            .quiet();
        let mut out = Vec::new();
        for p in paragraphs {
            let spans = candidate_spans(&p.text, &words(&p.text), MAX_CANDIDATE_TOKENS);
            if spans.is_empty() {
                continue;
            }
            let chars: Vec<char> = p.text.chars().collect();
            let docs = spans.iter().enumerate().map(|(i, s)| {
                (
                    i.to_string(),
                    chars[s.start..s.end].iter().collect::<String>(),
                )
            });
            let index = builder
                .build(docs)
                .expect("non-empty candidate set with a valid bin count");
            let scores = index.score_all(&index.vectorize_query_full(question));
            if let Some((i, score)) = first_argmax(scores) {
                out.push(AnswerCandidate::from_span(
                    p,
                    spans[i].start,
                    spans[i].end,
                    score,
                ));
            }
        }
        Ok(out)
    }
}

/// Keeps the candidate whose summed word vectors are closest (cosine) to the
/// question's.
#[derive(Debug, Clone)]
pub struct EmbeddingReader {
    vectors: Arc<WordVectors>,
}

impl EmbeddingReader {
    pub fn new(vectors: Arc<WordVectors>) -> Self {
        EmbeddingReader { vectors }
    }
}

impl Reader for EmbeddingReader {
    fn name(&self) -> &'static str {
        "embedding"
    }

    fn read(
        &self,
        _qid: &str,
        question: &str,
        paragraphs: &[ParagraphHit],
    ) -> Result<Vec<AnswerCandidate>, ReaderError> {
        let q_tokens = words(question);
        let q = self.vectors.sum(q_tokens.iter().map(|t| t.stem.as_str()));
        let mut out = Vec::new();
        for p in paragraphs {
            let tokens = words(&p.text);
            let spans = candidate_spans(&p.text, &tokens, MAX_CANDIDATE_TOKENS);
            let scores = spans.iter().map(|s| {
                let v = self
                    .vectors
                    .sum(tokens[s.first..=s.last].iter().map(|t| t.stem.as_str()));
                cosine(&v, &q)
            });
            if let Some((i, score)) = first_argmax(scores) {
                out.push(AnswerCandidate::from_span(
                    p,
                    spans[i].start,
                    spans[i].end,
                    score,
                ));
            }
        }
        Ok(out)
    }
}
