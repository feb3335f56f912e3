//! A reader process speaking the JSON-lines protocol on stdin/stdout. It
//! scores spans with the TF-IDF baseline, so it can stand in for a neural
//! model:
//!
//! ```text
//! soqal answer --reader external --reader-cmd "target/debug/examples/external_reader_child" ...
//! ```

use std::error::Error;
use std::io::{BufRead, Write};

use soqal::corpus::AnalyzerConfig;
use soqal::readers::{CandidateSpan, Reader, ReaderRequest, ReaderResponse, TfidfReader};
use soqal::retriever::ParagraphHit;

pub fn respond(
    reader: &TfidfReader,
    req: &ReaderRequest,
) -> Result<ReaderResponse, Box<dyn Error>> {
    let paragraphs: Vec<ParagraphHit> = req
        .paragraphs
        .iter()
        .map(|p| ParagraphHit {
            article_id: p.id.clone(),
            paragraph_index: 0,
            text: p.text.clone(),
            doc_score: 0.0,
        })
        .collect();
    let candidates = reader
        .read(&req.qid, &req.question, &paragraphs)?
        .into_iter()
        .map(|c| CandidateSpan {
            paragraph_id: c.article_id,
            char_start: c.char_start,
            char_end: c.char_end,
            start_score: c.ans_raw.max(0.0).sqrt(),
            end_score: c.ans_raw.max(0.0).sqrt(),
        })
        .collect();
    Ok(ReaderResponse {
        qid: req.qid.clone(),
        candidates,
    })
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let reader = TfidfReader::new(&AnalyzerConfig::default());
    let line = r#"{"type":"read","qid":"q1","question":"أين يلعب ليفربول؟","paragraphs":[{"id":"liverpool#0","text":"يلعب النادي على ملعب الأنفيلد."}]}"#;
    let req: ReaderRequest = serde_json::from_str(line)?;
    println!("{}", serde_json::to_string(&respond(&reader, &req)?)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    let reader = TfidfReader::new(&AnalyzerConfig::default());
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req: ReaderRequest = serde_json::from_str(&line)?;
        writeln!(
            stdout,
            "{}",
            serde_json::to_string(&respond(&reader, &req)?)?
        )?;
        stdout.flush()?;
    }
    Ok(())
}
