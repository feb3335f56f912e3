//! Coarse bigram retrieval over articles followed by a per-question 4-gram
//! index over the survivors, then expansion into paragraphs.

use std::error::Error;

use soqal::corpus::{load_corpus, AnalyzerConfig, CorpusOptions, DocUnit, NgramRange};
use soqal::retriever::{
    expand_to_paragraphs, retrieve_flat, retrieve_hierarchical, HierarchicalConfig,
};
use soqal::tfidf::build_index;

const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_corpus.jsonl");

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let corpus = load_corpus(CORPUS, CorpusOptions::default())?;
    let stage1 = build_index(
        corpus.documents(DocUnit::Article),
        &AnalyzerConfig::default(),
        1 << 16,
    )?;
    let cfg = HierarchicalConfig {
        stage1_ngrams: NgramRange::BIGRAM,
        k1: 4,
        stage2_ngrams: NgramRange::FOURGRAM,
        k2: 2,
    };
    let question = "من أين ينبع النيل الأبيض؟";

    println!("flat bigram:");
    for hit in retrieve_flat(&stage1, question, 4) {
        println!("  {:<10} {:.4}", hit.doc_id, hit.score);
    }
    let hits = retrieve_hierarchical(&stage1, &corpus, question, &cfg)?;
    println!("hierarchical k1={} k2={}:", cfg.k1, cfg.k2);
    for hit in &hits {
        println!("  {:<10} {:.4}", hit.doc_id, hit.score);
    }
    for p in expand_to_paragraphs(&hits, &corpus, DocUnit::Article)? {
        println!("  {} ({:.3}): {}", p.id(), p.doc_score, p.text);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
