//! Runs the word-overlap baselines on gold paragraphs and scores them.

use std::error::Error;

use soqal::corpus::AnalyzerConfig;
use soqal::metrics::load_dataset;
use soqal::pipeline::evaluate_reader;
use soqal::readers::{RandomReader, Reader, SlidingWindowReader, TfidfReader};
use soqal::retriever::ParagraphHit;

const DATASET: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_dataset.json");

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dataset = load_dataset(DATASET, false)?;
    let readers: Vec<Box<dyn Reader>> = vec![
        Box::new(TfidfReader::new(&AnalyzerConfig::default())),
        Box::new(SlidingWindowReader),
        Box::new(RandomReader::new(7)),
    ];

    let first = &dataset.examples[0];
    let paragraph = ParagraphHit {
        article_id: first.qid.clone(),
        paragraph_index: 0,
        text: first.context.clone(),
        doc_score: 0.0,
    };
    println!("{}", first.question);
    for reader in &readers {
        let mut cands = reader.read(
            &first.qid,
            &first.question,
            std::slice::from_ref(&paragraph),
        )?;
        cands.sort_by(|a, b| b.ans_raw.total_cmp(&a.ans_raw));
        if let Some(best) = cands.first() {
            println!(
                "  {:<15} {:?} ({:.3})",
                reader.name(),
                best.text,
                best.ans_raw
            );
        }
    }

    println!("\n{:<15} {:>6} {:>6} {:>6}", "reader", "EM", "F1", "SM");
    for reader in &readers {
        let (report, _) = evaluate_reader(&dataset.examples, reader.as_ref(), 2)?;
        println!(
            "{:<15} {:>6.1} {:>6.1} {:>6.1}",
            reader.name(),
            report.exact_match,
            report.f1,
            report.sentence_match
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
