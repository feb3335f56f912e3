//! Adapter for a reader running in a child process, speaking newline-delimited
//! JSON over its stdin/stdout.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{words, AnswerCandidate, Reader, ReaderError};
use crate::retriever::ParagraphHit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParagraphPayload {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "read")]
pub struct ReaderRequest {
    pub qid: String,
    pub question: String,
    pub paragraphs: Vec<ParagraphPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSpan {
    pub paragraph_id: String,
    pub char_start: usize,
    pub char_end: usize,
    pub start_score: f64,
    pub end_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "candidates")]
pub struct ReaderResponse {
    pub qid: String,
    pub candidates: Vec<CandidateSpan>,
}

#[derive(Debug, Clone)]
pub struct ExternalReaderConfig {
    /// Program and arguments.
    pub command: Vec<String>,
    pub timeout: Duration,
    /// Longest accepted span in tokens (`j <= i + 15`).
    pub max_span_tokens: usize,
}

impl ExternalReaderConfig {
    pub fn new(command: Vec<String>) -> Self {
        ExternalReaderConfig {
            command,
            timeout: Duration::from_secs(60),
            max_span_tokens: 16,
        }
    }
}

/// One child process with strictly sequential request/response.
pub struct ReaderChannel {
    command: Vec<String>,
    timeout: Duration,
    live: Option<Live>,
}

struct Live {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Drop for Live {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl ReaderChannel {
    pub fn new(command: Vec<String>, timeout: Duration) -> Self {
        ReaderChannel {
            command,
            timeout,
            live: None,
        }
    }

    fn spawn(&self) -> Result<Live, ReaderError> {
        let display = self.command.join(" ");
        let (program, args) = self
            .command
            .split_first()
            .ok_or_else(|| ReaderError::Spawn {
                command: display.clone(),
                source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty command"),
            })?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| ReaderError::Spawn {
                command: display,
                source,
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Live {
            child,
            stdin,
            lines: rx,
        })
    }

    fn exited(&mut self, qid: &str) -> ReaderError {
        let status = match self.live.take() {
            Some(mut live) => match live.child.wait() {
                Ok(s) => s.to_string(),
                Err(e) => e.to_string(),
            },
            None => "not running".into(),
        };
        ReaderError::ChildExited {
            qid: qid.to_string(),
            status,
        }
    }

    /// Sends one request and waits for its response. A child that times out,
    /// exits or breaks the protocol is discarded and restarted on the next call.
    pub fn request(&mut self, req: &ReaderRequest) -> Result<ReaderResponse, ReaderError> {
        if self.live.is_none() {
            self.live = Some(self.spawn()?);
        }
        let qid = req.qid.as_str();
        let mut line = serde_json::to_string(req).expect("request serializes");
        line.push('\n');
        let live = self.live.as_mut().expect("spawned");
        if live
            .stdin
            .write_all(line.as_bytes())
            .and_then(|_| live.stdin.flush())
            .is_err()
        {
            return Err(self.exited(qid));
        }
        let reply = match live.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => return Err(self.exited(qid)),
            Err(RecvTimeoutError::Timeout) => {
                self.live = None;
                return Err(ReaderError::Timeout {
                    qid: qid.to_string(),
                });
            }
        };
        let protocol = |message: String| ReaderError::Protocol {
            qid: qid.to_string(),
            message,
        };
        let response: ReaderResponse = match serde_json::from_str(&reply) {
            Ok(r) => r,
            Err(e) => {
                self.live = None;
                return Err(protocol(format!("unparseable response: {e}")));
            }
        };
        if response.qid != qid {
            self.live = None;
            return Err(protocol(format!("response for {:?}", response.qid)));
        }
        Ok(response)
    }
}

/// Reader backed by a pool of child processes, one per worker thread.
pub struct ExternalReader {
    config: ExternalReaderConfig,
    channels: Vec<Mutex<ReaderChannel>>,
}

impl ExternalReader {
    pub fn new(config: ExternalReaderConfig, workers: usize) -> Self {
        let channels = (0..workers.max(1))
            .map(|_| Mutex::new(ReaderChannel::new(config.command.clone(), config.timeout)))
            .collect();
        ExternalReader { config, channels }
    }

    fn channel(&self) -> &Mutex<ReaderChannel> {
        let slot = rayon::current_thread_index().unwrap_or(0) % self.channels.len();
        &self.channels[slot]
    }

    fn validate(&self, qid: &str, span: &CandidateSpan, p: &ParagraphHit) -> Result<(), String> {
        let len = p.text.chars().count();
        if span.char_start >= span.char_end || span.char_end > len {
            return Err(format!(
                "span [{}, {}) outside paragraph of {len} chars",
                span.char_start, span.char_end
            ));
        }
        if !(span.start_score.is_finite() && span.end_score.is_finite()) {
            return Err("non-finite score".into());
        }
        let tokens = words(&p.text)
            .iter()
            .filter(|t| t.start < span.char_end && t.end > span.char_start)
            .count();
        if tokens == 0 || tokens > self.config.max_span_tokens {
            return Err(format!("span covers {tokens} tokens (question {qid})"));
        }
        Ok(())
    }
}

impl Reader for ExternalReader {
    fn name(&self) -> &'static str {
        "external"
    }

    fn read(
        &self,
        qid: &str,
        question: &str,
        paragraphs: &[ParagraphHit],
    ) -> Result<Vec<AnswerCandidate>, ReaderError> {
        let ids: Vec<String> = paragraphs.iter().map(ParagraphHit::id).collect();
        let req = ReaderRequest {
            qid: qid.to_string(),
            question: question.to_string(),
            paragraphs: ids
                .iter()
                .zip(paragraphs)
                .map(|(id, p)| ParagraphPayload {
                    id: id.clone(),
                    text: p.text.clone(),
                })
                .collect(),
        };
        let response = self
            .channel()
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .request(&req)?;
        let by_id: HashMap<&str, &ParagraphHit> =
            ids.iter().map(String::as_str).zip(paragraphs).collect();
        let mut out = Vec::new();
        for span in &response.candidates {
            let Some(p) = by_id.get(span.paragraph_id.as_str()) else {
                log::warn!(
                    "reader returned unknown paragraph {:?} for {qid}; dropped",
                    span.paragraph_id
                );
                continue;
            };
            match self.validate(qid, span, p) {
                Ok(()) => out.push(AnswerCandidate::from_span(
                    p,
                    span.char_start,
                    span.char_end,
                    span.start_score * span.end_score,
                )),
                Err(why) => log::warn!("dropped reader span for {qid}: {why}"),
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(script: &str) -> ExternalReaderConfig {
        ExternalReaderConfig {
            command: vec!["sh".into(), "-c".into(), script.into()],
            timeout: Duration::from_millis(500),
            max_span_tokens: 16,
        }
    }

    // Answers every request with the same spans, echoing qid and first paragraph id.
    fn echo(spans: &str) -> ExternalReaderConfig {
        sh(&format!(
            r#"while read -r line; do
                 qid=$(printf '%s' "$line" | sed 's/.*"qid":"\([^"]*\)".*/\1/')
                 pid=$(printf '%s' "$line" | sed 's/.*"paragraphs":\[{{"id":"\([^"]*\)".*/\1/')
                 printf '{{"type":"candidates","qid":"%s","candidates":[{spans}]}}\n' "$qid" "$pid" "$pid"
               done"#
        ))
    }

    fn para(text: &str) -> Vec<ParagraphHit> {
        vec![ParagraphHit {
            article_id: "a".into(),
            paragraph_index: 0,
            text: text.into(),
            doc_score: 0.4,
        }]
    }

    const SPANS: &str = r#"{"paragraph_id":"%s","char_start":0,"char_end":5,"start_score":1.0,"end_score":1.0},{"paragraph_id":"%s","char_start":3,"char_end":99,"start_score":2.0,"end_score":2.0}"#;

    #[test]
    fn request_wire_format() {
        let req = ReaderRequest {
            qid: "q".into(),
            question: "?".into(),
            paragraphs: vec![ParagraphPayload {
                id: "a#0".into(),
                text: "t".into(),
            }],
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"type":"read","qid":"q","question":"?","paragraphs":[{"id":"a#0","text":"t"}]}"#
        );
        let resp: ReaderResponse =
            serde_json::from_str(r#"{"type":"candidates","qid":"q","candidates":[]}"#).unwrap();
        assert!(resp.candidates.is_empty());
    }

    #[test]
    fn echo_child_returns_valid_span_and_drops_out_of_bounds() {
        let reader = ExternalReader::new(echo(SPANS), 1);
        let ps = para("hello world again");
        for qid in ["q1", "q2"] {
            let out = reader.read(qid, "who", &ps).unwrap();
            assert_eq!(out.len(), 1);
            assert_eq!(
                (out[0].char_start, out[0].char_end, out[0].text.as_str()),
                (0, 5, "hello")
            );
            assert_eq!(out[0].ans_raw, 1.0);
            assert_eq!(out[0].doc_score, 0.4);
        }
    }

    #[test]
    fn long_spans_dropped() {
        let text = (0..20)
            .map(|i| format!("w{i}"))
            .collect::<Vec<_>>()
            .join(" ");
        let spans = format!(
            r#"{{"paragraph_id":"%s","char_start":0,"char_end":{},"start_score":1.0,"end_score":1.0}},{{"paragraph_id":"%s","char_start":0,"char_end":2,"start_score":3.0,"end_score":0.5}}"#,
            text.chars().count()
        );
        let reader = ExternalReader::new(echo(&spans), 1);
        let out = reader.read("q", "x", &para(&text)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].text.as_str(), out[0].ans_raw), ("w0", 1.5));
    }

    #[test]
    fn distinct_failures() {
        let ps = para("hello world");
        let slow = ExternalReader::new(sh("read -r line; sleep 5"), 1);
        assert!(
            matches!(slow.read("q7", "x", &ps), Err(ReaderError::Timeout { qid }) if qid == "q7")
        );

        let dead = ExternalReader::new(sh("exit 3"), 1);
        assert!(matches!(
            dead.read("q", "x", &ps),
            Err(ReaderError::ChildExited { .. })
        ));

        let garbage = ExternalReader::new(sh("while read -r l; do echo nonsense; done"), 1);
        assert!(matches!(
            garbage.read("q", "x", &ps),
            Err(ReaderError::Protocol { .. })
        ));

        let wrong_qid = ExternalReader::new(
            sh(
                r#"while read -r l; do echo '{"type":"candidates","qid":"other","candidates":[]}'; done"#,
            ),
            1,
        );
        assert!(matches!(
            wrong_qid.read("q", "x", &ps),
            Err(ReaderError::Protocol { .. })
        ));

        let missing = ExternalReader::new(
            ExternalReaderConfig::new(vec!["/nonexistent/reader-binary".into()]),
            1,
        );
        assert!(matches!(
            missing.read("q", "x", &ps),
            Err(ReaderError::Spawn { .. })
        ));
    }

    #[test]
    fn unknown_paragraph_ids_dropped() {
        let reader = ExternalReader::new(
            echo(
                r#"{"paragraph_id":"zz#9","char_start":0,"char_end":1,"start_score":1.0,"end_score":1.0}"#,
            ),
            1,
        );
        assert!(reader.read("q", "x", &para("abc def")).unwrap().is_empty());
    }
}
