//! End-to-end retrieval: the decomposition/compression expansion, the
//! generative baselines, and the ablation switches.
//!
//! An [`Engine`] owns the indexes and model clients; a [`PipelineConfig`]
//! says what to do with them. [`run_batch`] executes many queries in
//! parallel and assembles a [`RunResult`] in input order.

mod config;
mod engine;
mod run;

pub use config::{Ablation, Ablations, Method, PipelineConfig};
pub use engine::{expand_decor, expansion_embedding, run_query, Engine, ExpandedQuery};
pub use run::{
    run_batch, LlmCalls, QueryFailure, QueryResult, QueryTrace, RunResult, Stage, SubQueryTrace,
};
