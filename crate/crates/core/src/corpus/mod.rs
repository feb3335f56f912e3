//! The document collection and the text analysis applied to it.

mod analyzer;
pub mod text;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use analyzer::{
    analyze, default_stopwords, ngrams, parse_stopwords, Analyzer, AnalyzerConfig,
    InvalidNgramRange, NgramRange, StemRules, Token, TokenStream,
};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate article id {0:?}")]
    DuplicateId(String),
}

/// Whether an index row is a whole article or a single paragraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DocUnit {
    #[default]
    Article,
    Paragraph,
}

impl DocUnit {
    pub fn as_u8(self) -> u8 {
        match self {
            DocUnit::Article => 0,
            DocUnit::Paragraph => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(DocUnit::Article),
            1 => Some(DocUnit::Paragraph),
            _ => None,
        }
    }
}

impl std::str::FromStr for DocUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "article" => Ok(DocUnit::Article),
            "paragraph" => Ok(DocUnit::Paragraph),
            other => Err(format!(
                "unknown unit {other:?}, expected article or paragraph"
            )),
        }
    }
}

/// Separator placed between paragraphs when an article is indexed as one document.
pub const PARAGRAPH_SEPARATOR: &str = "\n\n";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paragraph {
    pub article_id: String,
    pub index: usize,
    /// Char offset of this paragraph inside [`Article::text`].
    pub offset: usize,
    pub text: String,
}

impl Paragraph {
    pub fn doc_id(&self) -> String {
        paragraph_doc_id(&self.article_id, self.index)
    }
}

/// Document id of a paragraph-unit row: `<article_id>#<index>`.
pub fn paragraph_doc_id(article_id: &str, index: usize) -> String {
    format!("{article_id}#{index}")
}

/// Inverse of [`paragraph_doc_id`].
pub fn parse_paragraph_doc_id(doc_id: &str) -> Option<(&str, usize)> {
    let (article, idx) = doc_id.rsplit_once('#')?;
    Some((article, idx.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Article {
    pub id: String,
    pub title: String,
    pub paragraphs: Vec<Paragraph>,
}

impl Article {
    pub fn text(&self) -> String {
        self.paragraphs
            .iter()
            .map(|p| p.text.as_str())
            .collect::<Vec<_>>()
            .join(PARAGRAPH_SEPARATOR)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusOptions {
    /// Paragraphs with fewer chars than this after trimming are dropped.
    pub min_paragraph_chars: usize,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            min_paragraph_chars: 1,
        }
    }
}

/// Immutable article collection with id lookup.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    articles: Vec<Article>,
    by_id: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct RawArticle {
    id: String,
    #[serde(default)]
    title: String,
    paragraphs: Vec<String>,
}

impl Corpus {
    /// Builds a corpus from `(id, title, paragraphs)` triples.
    pub fn from_articles<I, P>(articles: I, opts: CorpusOptions) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (String, String, P)>,
        P: IntoIterator<Item = String>,
    {
        let mut corpus = Corpus::default();
        for (id, title, paragraphs) in articles {
            corpus.push(id, title, paragraphs, opts)?;
        }
        Ok(corpus)
    }

    fn push(
        &mut self,
        id: String,
        title: String,
        paragraphs: impl IntoIterator<Item = String>,
        opts: CorpusOptions,
    ) -> Result<(), CorpusError> {
        if self.by_id.contains_key(&id) {
            return Err(CorpusError::DuplicateId(id));
        }
        let mut kept = Vec::new();
        let mut offset = 0;
        for text in paragraphs {
            if text.trim().chars().count() < opts.min_paragraph_chars.max(1) {
                continue;
            }
            if !kept.is_empty() {
                offset += PARAGRAPH_SEPARATOR.chars().count();
            }
            let len = text.chars().count();
            kept.push(Paragraph {
                article_id: id.clone(),
                index: kept.len(),
                offset,
                text,
            });
            offset += len;
        }
        self.by_id.insert(id.clone(), self.articles.len());
        self.articles.push(Article {
            id,
            title,
            paragraphs: kept,
        });
        Ok(())
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn paragraph_count(&self) -> usize {
        self.articles.iter().map(|a| a.paragraphs.len()).sum()
    }

    pub fn article(&self, id: &str) -> Option<&Article> {
        self.by_id.get(id).map(|&i| &self.articles[i])
    }

    pub fn paragraph(&self, article_id: &str, index: usize) -> Option<&Paragraph> {
        self.article(article_id)?.paragraphs.get(index)
    }

    /// `(doc_id, text)` pairs for indexing at the given granularity.
    pub fn documents(&self, unit: DocUnit) -> Vec<(String, String)> {
        match unit {
            DocUnit::Article => self
                .articles
                .iter()
                .map(|a| (a.id.clone(), a.text()))
                .collect(),
            DocUnit::Paragraph => self
                .articles
                .iter()
                .flat_map(|a| a.paragraphs.iter().map(|p| (p.doc_id(), p.text.clone())))
                .collect(),
        }
    }

    /// Text of one document id at the given granularity.
    pub fn document_text(&self, doc_id: &str, unit: DocUnit) -> Option<String> {
        match unit {
            DocUnit::Article => self.article(doc_id).map(Article::text),
            DocUnit::Paragraph => {
                let (a, i) = parse_paragraph_doc_id(doc_id)?;
                self.paragraph(a, i).map(|p| p.text.clone())
            }
        }
    }

    pub fn contains_doc(&self, doc_id: &str, unit: DocUnit) -> bool {
        match unit {
            DocUnit::Article => self.by_id.contains_key(doc_id),
            DocUnit::Paragraph => {
                parse_paragraph_doc_id(doc_id).is_some_and(|(a, i)| self.paragraph(a, i).is_some())
            }
        }
    }
}

/// Reads a JSONL corpus: one `{"id", "title", "paragraphs"}` object per line.
pub fn load_corpus(path: impl AsRef<Path>, opts: CorpusOptions) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut corpus = Corpus::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawArticle = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        corpus.push(raw.id, raw.title, raw.paragraphs, opts)?;
    }
    if corpus.is_empty() {
        log::warn!("corpus {} contains no articles", path.display());
    }
    Ok(corpus)
}
