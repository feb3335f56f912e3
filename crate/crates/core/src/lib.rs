//! Open-domain question answering over a large text collection.
//!
//! The pipeline has three stages:
//!
//! 1. **Retrieval** ([`retriever`]): a bigram TF-IDF index over the whole
//!    collection returns a large candidate set, which is re-ranked per question
//!    by a transient 4-gram TF-IDF index ([`tfidf`]).
//! 2. **Reading** ([`readers`]): paragraphs of the retrieved documents are
//!    scanned for answer spans, either by one of the non-neural baselines or by
//!    an external neural reader speaking a JSON-lines protocol.
//! 3. **Ranking** ([`fusion`]): document and answer scores are softmax
//!    normalized per question and combined linearly with a tuned weight.
//!
//! [`metrics`] implements exact match, token F1, sentence match and retriever
//! recall over SQuAD-shaped datasets, and [`align`] repairs datasets whose
//! answers drifted from their paragraphs (e.g. after machine translation).

pub mod align;
pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod fusion;
pub mod metrics;
pub mod pipeline;
pub mod readers;
pub mod retriever;
pub mod tfidf;
