//! Repairs answers that no longer occur verbatim in their context (e.g. after
//! machine translation) by picking the token span with the smallest
//! character-level edit distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::text::{char_slice, normalize_chars};
use crate::metrics::SquadFile;
use crate::readers::gen_word_spans;

pub const DEFAULT_MAX_WORDS: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlignError {
    #[error("answer is empty after normalization")]
    EmptyAnswer,
    #[error("context has no tokens")]
    NoTokens,
    #[error("max_words must be at least 1")]
    BadMaxWords,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlignmentResult {
    pub char_start: usize,
    pub char_end: usize,
    pub matched_text: String,
    pub distance: usize,
    pub exact: bool,
}

/// Diacritics, tatweel and alef variants normalized, whitespace collapsed
/// and trimmed.
pub fn normalize_for_alignment(text: &str) -> Vec<char> {
    let mut out = collapse(text);
    if out.first() == Some(&' ') {
        out.remove(0);
    }
    if out.last() == Some(&' ') {
        out.pop();
    }
    out
}

fn collapse(text: &str) -> Vec<char> {
    let mut out = Vec::new();
    for c in normalize_chars(text).chars() {
        if !c.is_whitespace() {
            out.push(c);
        } else if out.last() != Some(&' ') {
            out.push(' ');
        }
    }
    out
}

/// Unit-cost Levenshtein distance.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for &c in a {
        push_char(&mut row, c, b);
    }
    row[b.len()]
}

/// Advances a DP row by one source character.
fn push_char(row: &mut [usize], c: char, target: &[char]) {
    let mut diag = row[0];
    row[0] += 1;
    for j in 1..row.len() {
        let up = row[j];
        row[j] = (up + 1)
            .min(row[j - 1] + 1)
            .min(diag + usize::from(c != target[j - 1]));
        diag = up;
    }
}

pub fn align_answer(
    context: &str,
    answer: &str,
    max_words: usize,
) -> Result<AlignmentResult, AlignError> {
    if max_words == 0 {
        return Err(AlignError::BadMaxWords);
    }
    let target = normalize_for_alignment(answer);
    if target.is_empty() {
        return Err(AlignError::EmptyAnswer);
    }
    let tokens = gen_word_spans(context);
    if tokens.is_empty() {
        return Err(AlignError::NoTokens);
    }
    // Normalized pieces: token i, then the gap between token i and i+1.
    let token_text: Vec<Vec<char>> = tokens
        .iter()
        .map(|&(s, e)| normalize_for_alignment(char_slice(context, s, e)))
        .collect();
    let gap_text: Vec<Vec<char>> = tokens
        .windows(2)
        .map(|w| collapse(char_slice(context, w[0].1, w[1].0)))
        .collect();

    // (distance, length gap, start token, end token)
    let mut best: Option<(usize, usize, usize, usize)> = None;
    let mut row = vec![0usize; target.len() + 1];
    for a in 0..tokens.len() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = j;
        }
        let mut len = 0;
        for b in a..tokens.len().min(a + max_words) {
            if b > a {
                for &c in &gap_text[b - 1] {
                    push_char(&mut row, c, &target);
                }
                len += gap_text[b - 1].len();
            }
            for &c in &token_text[b] {
                push_char(&mut row, c, &target);
            }
            len += token_text[b].len();
            let key = (row[target.len()], len.abs_diff(target.len()), a, b);
            if best.is_none_or(|bk| key < bk) {
                best = Some(key);
            }
            let floor = *row.iter().min().expect("non-empty row");
            if best.is_some_and(|bk| floor > bk.0) {
                break;
            }
        }
    }
    let (distance, _, a, b) = best.expect("at least one span");
    let (char_start, char_end) = (tokens[a].0, tokens[b].1);
    Ok(AlignmentResult {
        char_start,
        char_end,
        matched_text: char_slice(context, char_start, char_end).to_string(),
        distance,
        exact: distance == 0,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignStats {
    pub exact: usize,
    pub repaired_exact: usize,
    pub repaired_fuzzy: usize,
    pub failed: usize,
}

impl AlignStats {
    fn add(mut self, o: AlignStats) -> AlignStats {
        self.exact += o.exact;
        self.repaired_exact += o.repaired_exact;
        self.repaired_fuzzy += o.repaired_fuzzy;
        self.failed += o.failed;
        self
    }
}

/// Rewrites every answer whose text is not found at `answer_start`. Answers
/// present verbatim elsewhere in the context only get their offset fixed and
/// count as exact.
pub fn align_dataset(file: &SquadFile, max_words: usize) -> (SquadFile, AlignStats) {
    let mut out = file.clone();
    let stats = out
        .data
        .par_iter_mut()
        .flat_map(|a| a.paragraphs.par_iter_mut())
        .map(|p| {
            let mut stats = AlignStats::default();
            let context = &p.context;
            for qa in &mut p.qas {
                for ans in &mut qa.answers {
                    if ans.matches(context) {
                        stats.exact += 1;
                        continue;
                    }
                    if let Some(b) = context.find(ans.text.as_str()) {
                        ans.answer_start = context[..b].chars().count();
                        stats.exact += 1;
                        continue;
                    }
                    match align_answer(context, &ans.text, max_words) {
                        Ok(r) => {
                            if r.exact {
                                stats.repaired_exact += 1;
                            } else {
                                stats.repaired_fuzzy += 1;
                            }
                            ans.text = r.matched_text;
                            ans.answer_start = r.char_start;
                        }
                        Err(e) => {
                            log::warn!(
                                "question {}: cannot align answer {:?}: {e}",
                                qa.id,
                                ans.text
                            );
                            stats.failed += 1;
                        }
                    }
                }
            }
            stats
        })
        .reduce(AlignStats::default, AlignStats::add);
    (out, stats)
}
