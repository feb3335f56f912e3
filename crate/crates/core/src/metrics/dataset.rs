//! SQuAD v1.1 files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::MetricsError;
use crate::corpus::text::char_slice;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    pub data: Vec<SquadArticle>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadArticle {
    #[serde(default)]
    pub title: String,
    pub paragraphs: Vec<SquadParagraph>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadParagraph {
    pub context: String,
    pub qas: Vec<SquadQa>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadQa {
    pub id: String,
    pub question: String,
    pub answers: Vec<SquadAnswer>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquadAnswer {
    pub text: String,
    /// Char offset into the context.
    pub answer_start: usize,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl SquadAnswer {
    pub fn new(text: impl Into<String>, answer_start: usize) -> Self {
        SquadAnswer {
            text: text.into(),
            answer_start,
            extra: Map::new(),
        }
    }

    pub fn matches(&self, context: &str) -> bool {
        char_slice(
            context,
            self.answer_start,
            self.answer_start + self.text.chars().count(),
        ) == self.text
    }
}

/// One question with its gold paragraph.
#[derive(Debug, Clone, PartialEq)]
pub struct QaExample {
    pub qid: String,
    pub question: String,
    pub context: String,
    /// `(text, answer_start)` pairs.
    pub golds: Vec<(String, usize)>,
}

impl QaExample {
    pub fn gold_texts(&self) -> impl Iterator<Item = &str> {
        self.golds.iter().map(|(t, _)| t.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub file: SquadFile,
    pub examples: Vec<QaExample>,
    /// Questions with at least one gold whose `answer_start` does not point at its text.
    pub offset_mismatches: Vec<String>,
}

impl SquadFile {
    pub fn examples(&self) -> (Vec<QaExample>, Vec<String>) {
        let mut examples = Vec::new();
        let mut bad = Vec::new();
        for article in &self.data {
            for p in &article.paragraphs {
                for qa in &p.qas {
                    if qa.answers.iter().any(|a| !a.matches(&p.context)) {
                        bad.push(qa.id.clone());
                    }
                    examples.push(QaExample {
                        qid: qa.id.clone(),
                        question: qa.question.clone(),
                        context: p.context.clone(),
                        golds: qa
                            .answers
                            .iter()
                            .map(|a| (a.text.clone(), a.answer_start))
                            .collect(),
                    });
                }
            }
        }
        (examples, bad)
    }
}

/// Parses a dataset. Offset mismatches are logged per question; with `strict`
/// they become an error.
pub fn parse_dataset(json: &str, strict: bool) -> Result<Dataset, MetricsError> {
    let file: SquadFile = serde_json::from_str(json).map_err(MetricsError::Json)?;
    if file.version.is_none() {
        log::warn!("dataset has no \"version\" key; reading it as SQuAD v1.1");
    }
    let (examples, offset_mismatches) = file.examples();
    for qid in &offset_mismatches {
        log::warn!("question {qid}: answer_start does not point at the answer text");
    }
    if strict && !offset_mismatches.is_empty() {
        return Err(MetricsError::OffsetMismatch(offset_mismatches.len()));
    }
    Ok(Dataset {
        file,
        examples,
        offset_mismatches,
    })
}

pub fn load_dataset(path: impl AsRef<Path>, strict: bool) -> Result<Dataset, MetricsError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MetricsError::Io {
        path: path.into(),
        source,
    })?;
    parse_dataset(&text, strict)
}

pub fn save_dataset(file: &SquadFile, path: impl AsRef<Path>) -> Result<(), MetricsError> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(file).map_err(MetricsError::Json)?;
    std::fs::write(path, json + "\n").map_err(|source| MetricsError::Io {
        path: path.into(),
        source,
    })
}
