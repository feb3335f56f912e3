//! Word-vector baselines: an embedding retriever and an embedding reader. The
//! vectors here come from hashed character trigrams, so words sharing
//! spelling share direction; real runs load fastText-style text vectors.

use std::collections::BTreeSet;
use std::error::Error;
use std::sync::Arc;

use soqal::corpus::{analyze, load_corpus, AnalyzerConfig, CorpusOptions, DocUnit};
use soqal::embedding::WordVectors;
use soqal::metrics::load_dataset;
use soqal::pipeline::evaluate_reader;
use soqal::readers::EmbeddingReader;
use soqal::retriever::EmbeddingRetriever;

const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_corpus.jsonl");
const DATASET: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_dataset.json");
const DIM: usize = 64;

fn trigram_vector(word: &str) -> Vec<f32> {
    let chars: Vec<char> = format!("<{word}>").chars().collect();
    let mut v = vec![0f32; DIM];
    for w in chars.windows(3) {
        let h = w
            .iter()
            .fold(17u32, |h, &c| h.wrapping_mul(31).wrapping_add(c as u32));
        v[h as usize % DIM] += 1.0;
    }
    v
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let corpus = load_corpus(CORPUS, CorpusOptions::default())?;
    let dataset = load_dataset(DATASET, false)?;
    let surface = AnalyzerConfig::surface();
    let texts = corpus
        .documents(DocUnit::Paragraph)
        .into_iter()
        .map(|(_, t)| t)
        .chain(dataset.examples.iter().map(|e| e.question.clone()));
    let words: BTreeSet<String> = texts
        .flat_map(|t| analyze(&t, &surface).tokens.into_iter().map(|tok| tok.stem))
        .collect();
    let mut vectors = WordVectors::new(DIM);
    for w in &words {
        vectors.insert(w, trigram_vector(w));
    }
    let vectors = Arc::new(vectors);
    println!("{} word vectors of dimension {DIM}", vectors.len());

    let retriever = EmbeddingRetriever::build(&corpus, DocUnit::Article, vectors.clone());
    for e in dataset.examples.iter().take(3) {
        let hits: Vec<String> = retriever
            .retrieve(&e.question, 2)
            .iter()
            .map(|h| format!("{} {:.3}", h.doc_id, h.score))
            .collect();
        println!("{} -> {}", e.question, hits.join(", "));
    }

    let (report, _) = evaluate_reader(&dataset.examples, &EmbeddingReader::new(vectors), 2)?;
    println!("embedding reader: {}", serde_json::to_string(&report)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
