//! Full question answering over the toy corpus: hierarchical retrieval, the
//! TF-IDF reader and β fusion, then open-domain evaluation.

use std::error::Error;
use std::sync::Arc;

use soqal::corpus::{load_corpus, AnalyzerConfig, CorpusOptions, DocUnit};
use soqal::fusion::FusionConfig;
use soqal::metrics::load_dataset;
use soqal::pipeline::{Pipeline, PipelineOptions};
use soqal::readers::TfidfReader;
use soqal::retriever::HierarchicalConfig;
use soqal::tfidf::build_index;

const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_corpus.jsonl");
const DATASET: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_dataset.json");

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let corpus = Arc::new(load_corpus(CORPUS, CorpusOptions::default())?);
    let analyzer = AnalyzerConfig::default();
    let index = Arc::new(build_index(
        corpus.documents(DocUnit::Article),
        &analyzer,
        1 << 16,
    )?);
    let mut opts = PipelineOptions::new(FusionConfig::new(0.5, 3)?);
    opts.hierarchical = HierarchicalConfig {
        k1: 4,
        k2: 2,
        ..HierarchicalConfig::default()
    };
    let pipeline = Pipeline::new(index, corpus, Box::new(TfidfReader::new(&analyzer)), opts)?;

    let answers = pipeline.answer("demo", "من أسس القاهرة الحديثة؟")?;
    for a in &answers.answers {
        println!(
            "{:<24} {}#{} doc {:.3} ans {:.3} fused {:.3}",
            a.candidate.text,
            a.candidate.article_id,
            a.candidate.paragraph_index,
            a.doc_norm,
            a.ans_norm,
            a.fused
        );
    }

    let dataset = load_dataset(DATASET, false)?;
    let report = pipeline.evaluate_open_domain(&dataset.examples, None)?;
    println!("top-1 {}", serde_json::to_string(&report.top1)?);
    println!(
        "top-{} {}",
        report.top_n_size,
        serde_json::to_string(&report.top_n)?
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
