//! Multi-hop retrieval by structured query expansion.
//!
//! A query is decomposed into sub-queries by a chat model, each sub-query
//! pulls BM25 candidates that are compressed into a short query-focused
//! summary, and the original query plus every `sub-query + summary` pair are
//! embedded and averaged into one expansion vector. That vector ranks the
//! whole passage collection by cosine similarity.
//!
//! The crate is split along that data flow:
//!
//! - [`corpus`]: documents, passages, queries, gold relevance
//! - [`sparse`]: BM25 candidate retrieval
//! - [`embedding`]: encoders, cosine, the dense vector index
//! - [`llm`]: chat clients, decomposition, compression
//! - [`pipeline`]: the expansion, baselines and ablation switches
//! - [`eval`]: Hits@k, MAP@k, MRR@k over TREC run files
//!
//! The guide under `book/` walks through each stage; its code snippets are
//! compiled and run as doc-tests of this crate.

pub mod corpus;
pub mod embedding;
mod error;
pub mod eval;
pub mod hash;
mod hit;
pub mod http;
pub mod llm;
pub mod pipeline;
pub mod sparse;

pub use error::{Error, Result};
pub use hit::ScoredHit;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/bm25.md")]
    mod bm25 {}
    #[doc = include_str!("../../../book/src/dense.md")]
    mod dense {}
    #[doc = include_str!("../../../book/src/expansion.md")]
    mod expansion {}
    #[doc = include_str!("../../../book/src/ablations.md")]
    mod ablations {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
