//! Builds hashed TF-IDF indexes over the toy corpus at both granularities,
//! round-trips one through a file and queries it.

use std::error::Error;

use soqal::corpus::{load_corpus, AnalyzerConfig, CorpusOptions, DocUnit, NgramRange};
use soqal::tfidf::{load_index, save_index, IndexBuilder};

const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_corpus.jsonl");

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let corpus = load_corpus(CORPUS, CorpusOptions::default())?;
    let cfg = AnalyzerConfig::default().with_ngrams(NgramRange::BIGRAM);
    let question = "على أي ملعب يلعب نادي ليفربول مبارياته؟";

    for unit in [DocUnit::Article, DocUnit::Paragraph] {
        let index = IndexBuilder::new(&cfg)
            .hash_bins(1 << 18)
            .unit(unit)
            .build(corpus.documents(unit))?;
        println!(
            "{unit:?} index: {} documents, {} non-zeros",
            index.len(),
            index.nnz()
        );
        for hit in index.top_k(&index.vectorize_query(question), 3) {
            println!("  {:<14} {:.4}", hit.doc_id, hit.score);
        }
    }

    let index = IndexBuilder::new(&cfg)
        .hash_bins(1 << 12)
        .build(corpus.documents(DocUnit::Article))?;
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("toy.sqtf");
    save_index(&index, &path)?;
    let loaded = load_index(&path)?;
    let q = loaded.vectorize_query(question);
    assert_eq!(
        loaded.top_k(&q, 5),
        index.top_k(&index.vectorize_query(question), 5)
    );
    println!(
        "reloaded {} ({} bytes), results unchanged",
        path.display(),
        std::fs::metadata(&path)?.len()
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
