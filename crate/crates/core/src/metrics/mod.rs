//! SQuAD-style evaluation: exact match, token F1, sentence match and
//! retriever recall, with Arabic answer normalization.

mod dataset;

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::text::{
    is_punctuation, normalize_char, normalize_chars, normalize_with_offsets, sentence_of,
    sentence_spans,
};

pub use dataset::{
    load_dataset, parse_dataset, save_dataset, Dataset, QaExample, SquadAnswer, SquadArticle,
    SquadFile, SquadParagraph, SquadQa,
};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid dataset JSON: {0}")]
    Json(#[source] serde_json::Error),
    #[error("{0} question(s) have answer_start offsets that do not match their text")]
    OffsetMismatch(usize),
    #[error("prediction for unknown question {0:?}")]
    UnknownQuestion(String),
    #[error("cannot evaluate an empty dataset")]
    EmptyDataset,
}

const AL: &str = "ال";

/// Diacritics and tatweel removed, alef/ya unified, punctuation deleted,
/// whitespace collapsed and, with `strip_al`, the definite article removed
/// from each word (repeatedly, keeping at least two letters).
pub fn normalize_answer(text: &str, strip_al: bool) -> String {
    let cleaned: String = text
        .chars()
        .filter_map(|c| normalize_char(c, true, true))
        .filter(|&c| !is_punctuation(c))
        .collect();
    let words = cleaned.split_whitespace().map(|w| {
        let mut w = w;
        while strip_al && w.starts_with(AL) && w.chars().count() >= 4 {
            w = &w[AL.len()..];
        }
        w
    });
    words.collect::<Vec<_>>().join(" ")
}

pub fn exact_match<'a>(
    pred: &str,
    golds: impl IntoIterator<Item = &'a str>,
    strip_al: bool,
) -> bool {
    let p = normalize_answer(pred, strip_al);
    golds
        .into_iter()
        .any(|g| normalize_answer(g, strip_al) == p)
}

fn f1_single(pred: &str, gold: &str) -> f64 {
    let p: Vec<&str> = pred.split_whitespace().collect();
    let g: Vec<&str> = gold.split_whitespace().collect();
    if p.is_empty() || g.is_empty() {
        return if p.is_empty() && g.is_empty() {
            1.0
        } else {
            0.0
        };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0;
    for t in &p {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / p.len() as f64;
    let recall = overlap as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Token-overlap F1, maximized over golds.
pub fn f1<'a>(pred: &str, golds: impl IntoIterator<Item = &'a str>, strip_al: bool) -> f64 {
    let p = normalize_answer(pred, strip_al);
    golds
        .into_iter()
        .map(|g| f1_single(&p, &normalize_answer(g, strip_al)))
        .fold(0.0, f64::max)
}

/// A predicted answer, with its char span in the gold context when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub text: String,
    pub span: Option<(usize, usize)>,
}

impl Prediction {
    pub fn text(text: impl Into<String>) -> Self {
        Prediction {
            text: text.into(),
            span: None,
        }
    }

    pub fn span(text: impl Into<String>, start: usize, end: usize) -> Self {
        Prediction {
            text: text.into(),
            span: Some((start, end)),
        }
    }
}

/// Char offset of the first occurrence of `needle` in `context`: verbatim if
/// possible, otherwise after character normalization.
pub fn locate(needle: &str, context: &str) -> Option<usize> {
    if needle.trim().is_empty() {
        return None;
    }
    if let Some(b) = context.find(needle) {
        return Some(context[..b].chars().count());
    }
    let needle: Vec<char> = normalize_chars(needle).chars().collect();
    if needle.is_empty() {
        return None;
    }
    let (hay, offsets) = normalize_with_offsets(context);
    hay.windows(needle.len())
        .position(|w| w == needle.as_slice())
        .map(|i| offsets[i])
}

/// 1 when the prediction starts in the same sentence as any gold answer.
pub fn sentence_match(pred: &Prediction, golds: &[(String, usize)], context: &str) -> bool {
    let start = match pred.span {
        Some((s, _)) => Some(s),
        None => locate(&pred.text, context),
    };
    let Some(start) = start else {
        return false;
    };
    let spans = sentence_spans(context);
    let Some(sent) = sentence_of(&spans, start) else {
        return false;
    };
    golds
        .iter()
        .any(|&(_, g)| sentence_of(&spans, g) == Some(sent))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct QuestionScore {
    pub exact_match: f64,
    pub f1: f64,
    pub sentence_match: f64,
}

/// Scores a ranked prediction list: each metric is the max over the list.
pub fn score_question(example: &QaExample, preds: &[Prediction], strip_al: bool) -> QuestionScore {
    let mut s = QuestionScore::default();
    for p in preds {
        s.exact_match = s
            .exact_match
            .max(exact_match(&p.text, example.gold_texts(), strip_al) as u8 as f64);
        s.f1 = s.f1.max(f1(&p.text, example.gold_texts(), strip_al));
        s.sentence_match = s
            .sentence_match
            .max(sentence_match(p, &example.golds, &example.context) as u8 as f64);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub exact_match: f64,
    pub f1: f64,
    pub sentence_match: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall_at_k: Option<f64>,
}

/// Macro averages (×100) over the dataset. Questions without predictions score 0.
pub fn evaluate(
    examples: &[QaExample],
    predictions: &HashMap<String, Vec<Prediction>>,
    strip_al: bool,
) -> Result<EvalReport, MetricsError> {
    if examples.is_empty() {
        return Err(MetricsError::EmptyDataset);
    }
    let by_qid: HashMap<&str, &QaExample> = examples.iter().map(|e| (e.qid.as_str(), e)).collect();
    if let Some(q) = predictions
        .keys()
        .find(|q| !by_qid.contains_key(q.as_str()))
    {
        return Err(MetricsError::UnknownQuestion(q.clone()));
    }
    let mut scored: Vec<(&str, QuestionScore)> = Vec::with_capacity(examples.len());
    let mut missing = 0;
    for e in examples {
        let s = match predictions.get(&e.qid) {
            Some(p) => score_question(e, p, strip_al),
            None => {
                missing += 1;
                QuestionScore::default()
            }
        };
        scored.push((&e.qid, s));
    }
    if missing > 0 {
        log::warn!("{missing} question(s) have no prediction and score 0");
    }
    // Sum in qid order so the report does not depend on dataset order.
    scored.sort_by(|a, b| a.0.cmp(b.0));
    let n = scored.len() as f64;
    let avg =
        |f: fn(&QuestionScore) -> f64| 100.0 * scored.iter().map(|(_, s)| f(s)).sum::<f64>() / n;
    Ok(EvalReport {
        exact_match: avg(|s| s.exact_match),
        f1: avg(|s| s.f1),
        sentence_match: avg(|s| s.sentence_match),
        n: scored.len(),
        recall_at_k: None,
    })
}

/// Share (×100) of questions with a gold answer inside a retrieved document.
/// Matching is on normalized text unless `raw`.
pub fn retriever_recall(
    examples: &[QaExample],
    retrieved: &HashMap<String, Vec<String>>,
    raw: bool,
) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let norm = |t: &str| {
        if raw {
            t.to_string()
        } else {
            normalize_answer(t, false)
        }
    };
    let mut hits = 0;
    for e in examples {
        let Some(docs) = retrieved.get(&e.qid) else {
            log::warn!("no retrieval results for question {}", e.qid);
            continue;
        };
        let golds: Vec<String> = e.gold_texts().map(norm).filter(|g| !g.is_empty()).collect();
        if docs.iter().any(|d| {
            let d = norm(d);
            golds.iter().any(|g| d.contains(g.as_str()))
        }) {
            hits += 1;
        }
    }
    100.0 * hits as f64 / examples.len() as f64
}
