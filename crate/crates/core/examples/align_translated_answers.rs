//! Simulates answers damaged by translation and repairs them against their
//! contexts with edit-distance span alignment.

use std::error::Error;

use soqal::align::{align_answer, align_dataset, DEFAULT_MAX_WORDS};
use soqal::metrics::load_dataset;

const DATASET: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_dataset.json");

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let context = "يلعب النادي مبارياته على ملعب الأنفيلد منذ تأسيسه عام 1892.";
    for answer in [
        "ملعب الأنفيلد",
        "ملعب الانفيلد",
        "ملعب أنفيلد",
        "ستاد الأنفيلد",
    ] {
        let r = align_answer(context, answer, DEFAULT_MAX_WORDS)?;
        println!(
            "{answer:?} -> {:?} at {}..{} (distance {})",
            r.matched_text, r.char_start, r.char_end, r.distance
        );
    }

    let mut file = load_dataset(DATASET, false)?.file;
    for (i, qa) in file
        .data
        .iter_mut()
        .flat_map(|a| a.paragraphs.iter_mut())
        .flat_map(|p| p.qas.iter_mut())
        .enumerate()
    {
        let ans = &mut qa.answers[0];
        match i % 3 {
            0 => ans.answer_start += 3,
            1 => ans.text = ans.text.replacen('ا', "أ", 1),
            _ => ans.text.push('ة'),
        }
    }
    let (fixed, stats) = align_dataset(&file, DEFAULT_MAX_WORDS);
    println!("{}", serde_json::to_string(&stats)?);
    for qa in fixed
        .data
        .iter()
        .flat_map(|a| &a.paragraphs)
        .flat_map(|p| &p.qas)
    {
        println!(
            "  {}: {:?} at {}",
            qa.id, qa.answers[0].text, qa.answers[0].answer_start
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
