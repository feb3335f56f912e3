//! Text analysis: normalization, tokenization, stopword removal, light stemming
//! and n-gram extraction. Indexing and querying share one [`Analyzer`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::text::{is_delimiter, normalize_char};

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_ar.txt");

const DEFAULT_PREFIXES: &[&str] = &["وال", "بال", "كال", "فال", "ال", "لل", "و"];
const DEFAULT_SUFFIXES: &[&str] = &["ها", "ان", "ات", "ون", "ين", "ية", "يه", "ه", "ة", "ي"];

/// Inclusive n-gram order interval, `1 <= lo <= hi <= 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NgramRange {
    pub lo: usize,
    pub hi: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid n-gram range [{lo},{hi}]: need 1 <= lo <= hi <= 4")]
pub struct InvalidNgramRange {
    pub lo: usize,
    pub hi: usize,
}

impl NgramRange {
    pub const UNIGRAM: NgramRange = NgramRange { lo: 1, hi: 1 };
    pub const BIGRAM: NgramRange = NgramRange { lo: 1, hi: 2 };
    pub const FOURGRAM: NgramRange = NgramRange { lo: 1, hi: 4 };

    pub fn new(lo: usize, hi: usize) -> Result<Self, InvalidNgramRange> {
        if lo >= 1 && lo <= hi && hi <= 4 {
            Ok(NgramRange { lo, hi })
        } else {
            Err(InvalidNgramRange { lo, hi })
        }
    }

    /// Number of n-grams a stream of `m` tokens produces.
    pub fn count_for(&self, m: usize) -> usize {
        (self.lo..=self.hi).map(|n| (m + 1).saturating_sub(n)).sum()
    }
}

impl fmt::Display for NgramRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.lo, self.hi)
    }
}

impl std::str::FromStr for NgramRange {
    type Err = String;

    /// Accepts `"2"` (meaning `[1,2]`) or `"lo,hi"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}"));
        let (lo, hi) = match s.split_once(',') {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => (1, parse(s)?),
        };
        NgramRange::new(lo, hi).map_err(|e| e.to_string())
    }
}

/// Affix tables for the light stemmer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StemRules {
    pub prefixes: Vec<String>,
    pub suffixes: Vec<String>,
    pub min_stem_len: usize,
}

impl StemRules {
    pub fn none() -> Self {
        StemRules {
            prefixes: Vec::new(),
            suffixes: Vec::new(),
            min_stem_len: 1,
        }
    }
}

impl Default for StemRules {
    fn default() -> Self {
        StemRules {
            prefixes: DEFAULT_PREFIXES.iter().map(|s| s.to_string()).collect(),
            suffixes: DEFAULT_SUFFIXES.iter().map(|s| s.to_string()).collect(),
            min_stem_len: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub strip_diacritics: bool,
    pub unify_alef_ya: bool,
    pub stopwords: BTreeSet<String>,
    pub stem_rules: StemRules,
    pub ngram_range: NgramRange,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig {
            strip_diacritics: true,
            unify_alef_ya: true,
            stopwords: default_stopwords(),
            stem_rules: StemRules::default(),
            ngram_range: NgramRange::BIGRAM,
        }
    }
}

impl AnalyzerConfig {
    /// Normalized words only: no stopword removal, no stemming.
    pub fn surface() -> Self {
        AnalyzerConfig {
            stopwords: BTreeSet::new(),
            stem_rules: StemRules::none(),
            ngram_range: NgramRange::UNIGRAM,
            ..AnalyzerConfig::default()
        }
    }

    pub fn with_ngrams(mut self, range: NgramRange) -> Self {
        self.ngram_range = range;
        self
    }

    /// SHA-256 over the canonical JSON form. Stopwords are a `BTreeSet`, so
    /// the serialization is order-stable.
    pub fn digest(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("analyzer config serializes");
        Sha256::digest(&json).into()
    }
}

/// The stopword list shipped with the crate.
pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

/// One word per line; `#` starts a comment line.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub stem: String,
    /// Char offset of the first char in the original text.
    pub start: usize,
    /// Char offset one past the last char in the original text.
    pub end: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn stems(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.stem.as_str())
    }
}

/// Every contiguous n-gram for each order in `range`, shorter orders first,
/// tokens joined by a single space.
pub fn ngrams(stream: &TokenStream, range: NgramRange) -> Vec<String> {
    let stems: Vec<&str> = stream.stems().collect();
    let mut out = Vec::with_capacity(range.count_for(stems.len()));
    for n in range.lo..=range.hi {
        for window in stems.windows(n) {
            out.push(window.join(" "));
        }
    }
    out
}

/// Light affix stripper.
///
/// A word is *irreducible* when no admissible decomposition
/// `prefix + core + suffix` (at least one affix, `|core| >= min_stem_len`)
/// has an irreducible core. The stem of a reducible word is the core of the
/// first such decomposition, trying prefixes longest first and, for each,
/// suffixes longest first. Every stem is irreducible, so stemming a stem is
/// the identity.
#[derive(Debug, Clone)]
struct Stemmer {
    prefixes: Vec<String>,
    suffixes: Vec<String>,
    min_len: usize,
}

impl Stemmer {
    fn new(rules: &StemRules, normalize: impl Fn(&str) -> String) -> Self {
        let prepare = |list: &[String]| {
            let mut v: Vec<String> = list
                .iter()
                .map(|a| normalize(a))
                .filter(|a| !a.is_empty())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            v.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
            v.push(String::new());
            v
        };
        Stemmer {
            prefixes: prepare(&rules.prefixes),
            suffixes: prepare(&rules.suffixes),
            min_len: rules.min_stem_len,
        }
    }

    fn cores<'a>(&'a self, word: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        let len = word.chars().count();
        self.prefixes.iter().flat_map(move |p| {
            self.suffixes.iter().filter_map(move |x| {
                if p.is_empty() && x.is_empty() {
                    return None;
                }
                if p.len() + x.len() > word.len()
                    || !word.starts_with(p.as_str())
                    || !word.ends_with(x.as_str())
                {
                    return None;
                }
                let core_len = len - p.chars().count() - x.chars().count();
                (core_len >= self.min_len).then(|| &word[p.len()..word.len() - x.len()])
            })
        })
    }

    fn irreducible<'a>(&'a self, word: &'a str, memo: &mut HashMap<&'a str, bool>) -> bool {
        if let Some(&v) = memo.get(word) {
            return v;
        }
        let cores: Vec<&str> = self.cores(word).collect();
        let v = !cores.into_iter().any(|c| self.irreducible(c, memo));
        memo.insert(word, v);
        v
    }

    fn stem<'a>(&'a self, word: &'a str) -> &'a str {
        if self.prefixes.len() == 1 && self.suffixes.len() == 1 {
            return word;
        }
        let mut memo = HashMap::new();
        if self.irreducible(word, &mut memo) {
            return word;
        }
        let cores: Vec<&str> = self.cores(word).collect();
        cores
            .into_iter()
            .find(|c| self.irreducible(c, &mut memo))
            .unwrap_or(word)
    }
}

/// A compiled [`AnalyzerConfig`].
#[derive(Debug, Clone)]
pub struct Analyzer {
    config: AnalyzerConfig,
    stopwords: HashSet<String>,
    stemmer: Stemmer,
}

impl Analyzer {
    pub fn new(config: AnalyzerConfig) -> Self {
        let norm = |s: &str| -> String {
            s.chars()
                .filter_map(|c| normalize_char(c, config.strip_diacritics, config.unify_alef_ya))
                .collect()
        };
        let stopwords = config.stopwords.iter().map(|w| norm(w)).collect();
        let stemmer = Stemmer::new(&config.stem_rules, norm);
        Analyzer {
            config,
            stopwords,
            stemmer,
        }
    }

    pub fn config(&self) -> &AnalyzerConfig {
        &self.config
    }

    pub fn ngram_range(&self) -> NgramRange {
        self.config.ngram_range
    }

    fn is_stopword(&self, w: &str) -> bool {
        self.stopwords.contains(w)
    }

    pub fn analyze(&self, text: &str) -> TokenStream {
        let mut tokens = Vec::new();
        let mut surface = String::new();
        let mut start: Option<usize> = None;
        let mut pos = 0;
        for c in text.chars() {
            if is_delimiter(c) {
                if let Some(s) = start.take() {
                    self.emit(&mut tokens, &surface, s, pos);
                    surface.clear();
                }
            } else {
                start.get_or_insert(pos);
                if let Some(n) =
                    normalize_char(c, self.config.strip_diacritics, self.config.unify_alef_ya)
                {
                    surface.push(n);
                }
            }
            pos += 1;
        }
        if let Some(s) = start {
            self.emit(&mut tokens, &surface, s, pos);
        }
        TokenStream { tokens }
    }

    fn emit(&self, tokens: &mut Vec<Token>, surface: &str, start: usize, end: usize) {
        if surface.is_empty() || self.is_stopword(surface) {
            return;
        }
        let stem = self.stemmer.stem(surface);
        // A stem that collides with a stopword is dropped too, so re-analysing
        // analyzer output is a no-op.
        if self.is_stopword(stem) {
            return;
        }
        tokens.push(Token {
            stem: stem.to_string(),
            start,
            end,
        });
    }
}

/// Convenience wrapper compiling `cfg` for a single call.
pub fn analyze(text: &str, cfg: &AnalyzerConfig) -> TokenStream {
    Analyzer::new(cfg.clone()).analyze(text)
}
