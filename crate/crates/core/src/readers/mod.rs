//! Answer-span readers.
//!
//! Every reader turns `(question, paragraphs)` into [`AnswerCandidate`]s whose
//! `ans_raw` scores are comparable across paragraphs of the same question.
//! The baselines emit their best span per paragraph; the external reader
//! forwards whatever spans the child process proposes.

mod baselines;
mod external;

use std::sync::OnceLock;

use serde::Serialize;

use crate::corpus::text::{char_slice, sentence_spans};
use crate::corpus::{Analyzer, AnalyzerConfig, Token};
use crate::retriever::ParagraphHit;

pub use baselines::{
    sliding_window_score, EmbeddingReader, RandomReader, SlidingWindowReader, TfidfReader,
};
pub use external::{
    CandidateSpan, ExternalReader, ExternalReaderConfig, ParagraphPayload, ReaderChannel,
    ReaderRequest, ReaderResponse,
};

/// Longest candidate span, in tokens.
pub const MAX_CANDIDATE_TOKENS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerCandidate {
    pub article_id: String,
    pub paragraph_index: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub text: String,
    pub ans_raw: f64,
    pub doc_score: f64,
}

impl AnswerCandidate {
    pub fn from_span(p: &ParagraphHit, start: usize, end: usize, ans_raw: f64) -> Self {
        AnswerCandidate {
            article_id: p.article_id.clone(),
            paragraph_index: p.paragraph_index,
            char_start: start,
            char_end: end,
            text: char_slice(&p.text, start, end).to_string(),
            ans_raw,
            doc_score: p.doc_score,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReaderError {
    #[error("reader protocol violation for question {qid}: {message}")]
    Protocol { qid: String, message: String },
    #[error("reader timed out on question {qid}")]
    Timeout { qid: String },
    #[error("reader process exited ({status}) while answering {qid}")]
    ChildExited { qid: String, status: String },
    #[error("cannot start reader process {command:?}: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
}

pub trait Reader: Send + Sync {
    fn name(&self) -> &'static str;

    fn read(
        &self,
        qid: &str,
        question: &str,
        paragraphs: &[ParagraphHit],
    ) -> Result<Vec<AnswerCandidate>, ReaderError>;
}

/// Analyzer producing normalized surface words: the unit of candidate spans
/// and of the word-level baselines.
pub(crate) fn word_analyzer() -> &'static Analyzer {
    static WORDS: OnceLock<Analyzer> = OnceLock::new();
    WORDS.get_or_init(|| Analyzer::new(AnalyzerConfig::surface()))
}

pub(crate) fn words(text: &str) -> Vec<Token> {
    word_analyzer().analyze(text).tokens
}

/// A candidate span as a token range `[first, last]` plus its char offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Span {
    pub first: usize,
    pub last: usize,
    pub start: usize,
    pub end: usize,
}

/// Every run of 1..=`max_tokens` consecutive tokens inside one sentence,
/// ordered by start token then length.
pub(crate) fn candidate_spans(text: &str, tokens: &[Token], max_tokens: usize) -> Vec<Span> {
    let sentences = sentence_spans(text);
    let mut out = Vec::new();
    let mut t = 0;
    for (_, s_end) in sentences {
        let first = t;
        while t < tokens.len() && tokens[t].start < s_end {
            t += 1;
        }
        for a in first..t {
            for b in a..t.min(a + max_tokens) {
                out.push(Span {
                    first: a,
                    last: b,
                    start: tokens[a].start,
                    end: tokens[b].end,
                });
            }
        }
    }
    out
}

/// Char spans of the words of `text`.
pub fn gen_word_spans(text: &str) -> Vec<(usize, usize)> {
    words(text).into_iter().map(|t| (t.start, t.end)).collect()
}

/// Char spans of all candidate answers in a paragraph.
pub fn gen_candidates(paragraph: &str, max_tokens: usize) -> Vec<(usize, usize)> {
    candidate_spans(paragraph, &words(paragraph), max_tokens)
        .into_iter()
        .map(|s| (s.start, s.end))
        .collect()
}

/// Index of the first maximum.
pub(crate) fn first_argmax(scores: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best
}
