//! Exact match, token F1 and sentence match on a few hand-picked predictions.

use std::collections::HashMap;
use std::error::Error;

use soqal::metrics::{
    evaluate, exact_match, f1, load_dataset, normalize_answer, sentence_match, Prediction,
};

const DATASET: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_dataset.json");

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for (pred, gold) in [
        ("الأنفيلد", "ملعب الأنفيلد"),
        ("لِيفَرْبُول", "ليفربول"),
        ("القاهرة.", "قاهرة"),
    ] {
        println!(
            "{pred:?} vs {gold:?}: normalized {:?}, EM {}, F1 {:.3}",
            normalize_answer(pred, true),
            exact_match(pred, [gold], true),
            f1(pred, [gold], true)
        );
    }

    let context = "نهر النيل أطول أنهار العالم. ينبع النيل الأبيض من بحيرة فيكتوريا.";
    let golds = vec![("بحيرة فيكتوريا".to_string(), 45)];
    for pred in [
        Prediction::text("فيكتوريا"),
        Prediction::span("النيل", 4, 9),
    ] {
        println!(
            "{:?} same sentence as gold: {}",
            pred.text,
            sentence_match(&pred, &golds, context)
        );
    }

    let dataset = load_dataset(DATASET, true)?;
    let preds: HashMap<String, Vec<Prediction>> = dataset
        .examples
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let gold = &e.golds[0].0;
            let text = if i % 2 == 0 {
                gold.clone()
            } else {
                gold.split(' ').next_back().unwrap_or("").to_string()
            };
            (e.qid.clone(), vec![Prediction::text(text)])
        })
        .collect();
    let report = evaluate(&dataset.examples, &preds, true)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
