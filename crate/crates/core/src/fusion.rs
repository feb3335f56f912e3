//! Answer ranking: per-question softmax of document and answer scores, a
//! β-weighted linear fusion, and β selection by grid search on a dev set.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::metrics::{f1, normalize_answer};
use crate::readers::AnswerCandidate;

#[derive(Debug, thiserror::Error)]
pub enum FusionError {
    #[error("softmax of an empty list")]
    Empty,
    #[error("non-finite score {0}")]
    NonFinite(f64),
    #[error("beta must lie in [0, 1], got {0}")]
    BadBeta(f64),
    #[error("top_n must be at least 1")]
    BadTopN,
    #[error("grid step must lie in (0, 0.5], got {0}")]
    BadStep(f64),
    #[error("development set is empty")]
    EmptyDevSet,
    #[error("cannot write {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub fn softmax(scores: &[f64]) -> Result<Vec<f64>, FusionError> {
    if let Some(&bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(FusionError::NonFinite(bad));
    }
    let max = scores
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(FusionError::Empty)?;
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusedAnswer {
    pub candidate: AnswerCandidate,
    pub doc_norm: f64,
    pub ans_norm: f64,
    pub fused: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FusionConfig {
    pub beta: f64,
    pub top_n: usize,
}

impl FusionConfig {
    pub fn new(beta: f64, top_n: usize) -> Result<Self, FusionError> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(FusionError::BadBeta(beta));
        }
        if top_n == 0 {
            return Err(FusionError::BadTopN);
        }
        Ok(FusionConfig { beta, top_n })
    }
}

/// Fuses one question's candidates, best first. Ties go to the smaller
/// `(article_id, paragraph_index, char_start)`.
pub fn fuse(candidates: &[AnswerCandidate], beta: f64) -> Result<Vec<FusedAnswer>, FusionError> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let docs = softmax(&candidates.iter().map(|c| c.doc_score).collect::<Vec<_>>())?;
    let answers = softmax(&candidates.iter().map(|c| c.ans_raw).collect::<Vec<_>>())?;
    let mut out: Vec<FusedAnswer> = candidates
        .iter()
        .zip(docs.into_iter().zip(answers))
        .map(|(c, (d, a))| FusedAnswer {
            candidate: c.clone(),
            doc_norm: d,
            ans_norm: a,
            fused: beta * d + (1.0 - beta) * a,
        })
        .collect();
    out.sort_by(|x, y| {
        y.fused.total_cmp(&x.fused).then_with(|| {
            let (a, b) = (&x.candidate, &y.candidate);
            (&a.article_id, a.paragraph_index, a.char_start).cmp(&(
                &b.article_id,
                b.paragraph_index,
                b.char_start,
            ))
        })
    });
    Ok(out)
}

/// The first `top_n` answers with distinct normalized text.
pub fn rank_answers(fused: &[FusedAnswer], top_n: usize) -> Vec<FusedAnswer> {
    let mut seen = HashSet::new();
    fused
        .iter()
        .filter(|f| seen.insert(normalize_answer(&f.candidate.text, true)))
        .take(top_n)
        .cloned()
        .collect()
}

/// One development question: its reader candidates and gold answers.
#[derive(Debug, Clone)]
pub struct DevQuestion {
    pub candidates: Vec<AnswerCandidate>,
    pub golds: Vec<String>,
}

/// `0, step, 2·step, …` below 1, then 1 itself.
pub fn beta_grid(step: f64) -> Result<Vec<f64>, FusionError> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(FusionError::BadStep(step));
    }
    let mut grid: Vec<f64> = (0..)
        .map(|i| i as f64 * step)
        .take_while(|b| *b < 1.0 - 1e-9)
        .collect();
    grid.push(1.0);
    Ok(grid)
}

/// Mean top-1 F1 over the dev set at a given β.
pub fn dev_f1(dev: &[DevQuestion], beta: f64) -> Result<f64, FusionError> {
    let mut total = 0.0;
    for q in dev {
        let fused = fuse(&q.candidates, beta)?;
        if let Some(top) = fused.first() {
            total += f1(
                &top.candidate.text,
                q.golds.iter().map(String::as_str),
                true,
            );
        }
    }
    Ok(total / dev.len() as f64)
}

/// Smallest grid β reaching the best mean top-1 F1.
pub fn tune_beta(dev: &[DevQuestion], step: f64) -> Result<f64, FusionError> {
    if dev.is_empty() {
        return Err(FusionError::EmptyDevSet);
    }
    let grid = beta_grid(step)?;
    let scores = grid
        .par_iter()
        .map(|&b| dev_f1(dev, b))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    log::info!(
        "tuned beta = {} (dev top-1 F1 {:.4})",
        grid[best],
        scores[best]
    );
    Ok(grid[best])
}

/// Top-1 predictions file body: the first answer per question, or "".
pub fn top1_predictions(answers: &BTreeMap<String, Vec<String>>) -> BTreeMap<String, String> {
    answers
        .iter()
        .map(|(q, a)| (q.clone(), a.first().cloned().unwrap_or_default()))
        .collect()
}

pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<(), FusionError> {
    let path = path.as_ref();
    let mut body = serde_json::to_string_pretty(value).expect("predictions serialize");
    body.push('\n');
    std::fs::write(path, body).map_err(|source| FusionError::Io {
        path: path.into(),
        source,
    })
}
