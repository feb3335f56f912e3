#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soqal::corpus::{Corpus, CorpusOptions};
use soqal::metrics::QaExample;

/// Letters that never form an affix, so generated words survive stemming intact.
const LETTERS: [char; 22] = [
    'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ', 'ف',
    'ق', 'ك', 'م',
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vocabulary(rng: &mut impl Rng, n: usize) -> Vec<String> {
    let mut seen = HashSet::new();
    while seen.len() < n {
        let len = rng.random_range(4..=6);
        let w: String = (0..len).map(|_| *LETTERS.choose(rng).unwrap()).collect();
        seen.insert(w);
    }
    let mut v: Vec<String> = seen.into_iter().collect();
    v.sort();
    v
}

pub fn sentence(rng: &mut impl Rng, vocab: &[String], words: usize) -> Vec<String> {
    (0..words)
        .map(|_| vocab.choose(rng).unwrap().clone())
        .collect()
}

pub struct Planted {
    pub corpus: Corpus,
    pub examples: Vec<QaExample>,
    /// Article holding each question's gold paragraph.
    pub gold_article: Vec<String>,
}

/// One question per article: stopwords around a 4-word sequence that occurs
/// exactly once in the corpus; the gold answer is that sequence.
pub fn planted(
    seed: u64,
    articles: usize,
    paragraphs: usize,
    words: usize,
    vocab_size: usize,
) -> Planted {
    let mut rng = rng(seed);
    let vocab = vocabulary(&mut rng, vocab_size);
    let texts: Vec<Vec<Vec<String>>> = (0..articles)
        .map(|_| {
            (0..paragraphs)
                .map(|_| sentence(&mut rng, &vocab, words))
                .collect()
        })
        .collect();
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    for article in &texts {
        for p in article {
            for w in p.windows(4) {
                *counts.entry(w).or_default() += 1;
            }
        }
    }
    let mut examples = Vec::new();
    let mut gold_article = Vec::new();
    for (a, article) in texts.iter().enumerate() {
        let (pi, start) = loop {
            let pi = rng.random_range(0..paragraphs);
            let start = rng.random_range(0..words - 3);
            if counts[&article[pi][start..start + 4]] == 1 {
                break (pi, start);
            }
        };
        let para = &article[pi];
        let gram = para[start..start + 4].join(" ");
        let context = para.join(" ");
        let char_start = para[..start].iter().map(|w| w.chars().count() + 1).sum();
        examples.push(QaExample {
            qid: format!("q{a}"),
            question: format!("ما هو {gram} ؟"),
            context,
            golds: vec![(gram, char_start)],
        });
        gold_article.push(format!("a{a}"));
    }
    let corpus = Corpus::from_articles(
        texts.iter().enumerate().map(|(a, ps)| {
            (
                format!("a{a}"),
                String::new(),
                ps.iter().map(|p| p.join(" ")),
            )
        }),
        CorpusOptions::default(),
    )
    .unwrap();
    Planted {
        corpus,
        examples,
        gold_article,
    }
}

/// Documents over the words `w0..w{vocab}`.
pub fn random_docs(rng: &mut impl Rng, docs: usize, vocab: usize, max_len: usize) -> Vec<String> {
    (0..docs)
        .map(|_| {
            let len = rng.random_range(0..=max_len);
            (0..len)
                .map(|_| format!("w{}", rng.random_range(0..vocab)))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

pub fn random_query(rng: &mut impl Rng, vocab: usize) -> String {
    let len = rng.random_range(1..=5);
    (0..len)
        .map(|_| format!("w{}", rng.random_range(0..vocab)))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn corpus_of(docs: &[String]) -> Corpus {
    Corpus::from_articles(
        docs.iter()
            .enumerate()
            .map(|(i, d)| (format!("d{i}"), String::new(), vec![d.clone()])),
        CorpusOptions {
            min_paragraph_chars: 0,
        },
    )
    .unwrap()
}

#[derive(Debug, serde::Deserialize)]
pub struct MetricCase {
    pub name: String,
    pub context: String,
    pub pred: String,
    pub golds: Vec<(String, usize)>,
    pub em: u8,
    pub f1: f64,
    pub sm: u8,
    #[serde(default)]
    pub span: Option<(usize, usize)>,
}

pub fn metric_cases() -> Vec<MetricCase> {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/metric_cases.json"
    );
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Full-matrix edit distance.
pub fn edit_distance(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

pub const ALIGN_LETTERS: &[char] = &LETTERS;

pub fn data_file(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

/// Path of the protocol child example, building it if this test run did not.
pub fn reader_child() -> std::path::PathBuf {
    let exe = std::env::current_exe().unwrap();
    let dir = exe.parent().unwrap().parent().unwrap().join("examples");
    let path = dir.join(format!(
        "external_reader_child{}",
        std::env::consts::EXE_SUFFIX
    ));
    if !path.exists() {
        let status = std::process::Command::new(env!("CARGO"))
            .args([
                "build",
                "--example",
                "external_reader_child",
                "--manifest-path",
            ])
            .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/Cargo.toml"))
            .status()
            .unwrap();
        assert!(status.success());
    }
    path
}
