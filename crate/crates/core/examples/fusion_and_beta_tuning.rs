//! Collects reader candidates through the pipeline, tunes β on them and shows
//! how the ranking of one question moves with β.

use std::error::Error;
use std::sync::Arc;

use soqal::corpus::{load_corpus, AnalyzerConfig, CorpusOptions, DocUnit};
use soqal::fusion::{fuse, rank_answers, tune_beta, DevQuestion, FusionConfig};
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
        k2: 3,
        ..HierarchicalConfig::default()
    };
    let pipeline = Pipeline::new(index, corpus, Box::new(TfidfReader::new(&analyzer)), opts)?;

    let dataset = load_dataset(DATASET, false)?;
    let candidates = pipeline.collect_candidates(&dataset.examples)?;
    let dev: Vec<DevQuestion> = candidates
        .into_iter()
        .zip(&dataset.examples)
        .map(|(candidates, e)| DevQuestion {
            candidates,
            golds: e.gold_texts().map(str::to_string).collect(),
        })
        .collect();
    let beta = tune_beta(&dev, 0.1)?;
    println!("tuned beta = {beta}");

    let q = &dev[1];
    println!("{}", dataset.examples[1].question);
    for b in [0.0, beta, 1.0] {
        let ranked = rank_answers(&fuse(&q.candidates, b)?, 3);
        let shown: Vec<String> = ranked
            .iter()
            .map(|f| format!("{} ({:.3})", f.candidate.text, f.fused))
            .collect();
        println!("  beta {b:.1}: {}", shown.join(" | "));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
