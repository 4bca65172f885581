use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::QueryRecord;
use crate::error::{Error, Result};
use crate::hit::ScoredHit;
use crate::pipeline::engine::{execute, Engine};
use crate::pipeline::{Method, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Decompose,
    Retrieve,
    Compress,
    Generate,
    Embed,
    Search,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Decompose => "decompose",
            Stage::Retrieve => "retrieve",
            Stage::Compress => "compress",
            Stage::Generate => "generate",
            Stage::Embed => "embed",
            Stage::Search => "search",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LlmCalls {
    pub decompose: usize,
    pub compress: usize,
    pub generate: usize,
}

impl LlmCalls {
    pub fn total(&self) -> usize {
        self.decompose + self.compress + self.generate
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubQueryTrace {
    pub ordinal: usize,
    pub text: String,
    pub candidates: Vec<String>,
    /// `None` when the sub-query had no candidates and was skipped.
    pub compressed: Option<String>,
    #[serde(default)]
    pub compression_fallback: bool,
}

/// What one query did, stage by stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTrace {
    pub query_id: String,
    pub method: Method,
    pub sub_queries: Vec<SubQueryTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated: Option<String>,
    pub llm_calls: LlmCalls,
    pub bm25_calls: usize,
    pub num_hits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<BTreeMap<String, u64>>,
}

impl QueryTrace {
    pub(crate) fn empty(query_id: &str, method: Method) -> Self {
        QueryTrace {
            query_id: query_id.to_owned(),
            method,
            sub_queries: Vec::new(),
            generated: None,
            llm_calls: LlmCalls::default(),
            bm25_calls: 0,
            num_hits: 0,
            timing_ms: None,
        }
    }

    /// Number of sub-queries.
    pub fn m(&self) -> usize {
        self.sub_queries.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryFailure {
    pub query_id: String,
    /// Index of the query in the batch input.
    pub position: usize,
    pub stage: Stage,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub query_id: String,
    pub hits: Vec<ScoredHit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_tag: String,
    /// Echoed as the first trace line.
    pub effective_config: Value,
    /// Successful queries in input order.
    pub results: Vec<QueryResult>,
    /// Parallel to `results`.
    pub traces: Vec<QueryTrace>,
    pub failures: Vec<QueryFailure>,
}

#[derive(Serialize)]
struct TraceHeader<'a> {
    run_tag: &'a str,
    effective_config: &'a Value,
}

#[derive(Serialize)]
struct FailureLine<'a> {
    query_id: &'a str,
    failed: FailureDetail<'a>,
}

#[derive(Serialize)]
struct FailureDetail<'a> {
    stage: Stage,
    error: &'a str,
}

impl RunResult {
    pub fn hits(&self, query_id: &str) -> Option<&[ScoredHit]> {
        self.results
            .iter()
            .find(|r| r.query_id == query_id)
            .map(|r| r.hits.as_slice())
    }

    /// `query_id Q0 passage_id rank score run_tag`, one line per hit.
    pub fn to_trec(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            for h in &r.hits {
                // -0.0 would print with a sign
                let score = if h.score == 0.0 { 0.0 } else { h.score };
                writeln!(out, "{} Q0 {} {} {score:.6} {}", r.query_id, h.passage_id, h.rank, self.run_tag)
                    .expect("writing to a String");
            }
        }
        out
    }

    /// Header line, then one line per query in input order.
    pub fn trace_jsonl(&self) -> String {
        let mut lines = Vec::with_capacity(self.traces.len() + self.failures.len() + 1);
        lines.push(
            serde_json::to_string(&TraceHeader {
                run_tag: &self.run_tag,
                effective_config: &self.effective_config,
            })
            .expect("header serializes"),
        );
        let mut failures = self.failures.iter().peekable();
        let mut traces = self.traces.iter();
        let total = self.traces.len() + self.failures.len();
        for position in 0..total {
            if failures.peek().is_some_and(|f| f.position == position) {
                let f = failures.next().expect("peeked");
                lines.push(
                    serde_json::to_string(&FailureLine {
                        query_id: &f.query_id,
                        failed: FailureDetail {
                            stage: f.stage,
                            error: &f.error,
                        },
                    })
                    .expect("failure serializes"),
                );
            } else if let Some(t) = traces.next() {
                lines.push(serde_json::to_string(t).expect("trace serializes"));
            }
        }
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    pub fn write_run(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_trec())
    }

    pub fn write_trace(&self, path: &Path) -> Result<()> {
        write_file(path, &self.trace_jsonl())
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    crate::error::ensure_parent(path)?;
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Runs every query, up to `cfg.max_concurrent_queries` at a time. A failing
/// query is recorded in `failures` and does not stop the others.
pub fn run_batch(engine: &Engine, cfg: &PipelineConfig, queries: &[QueryRecord]) -> Result<RunResult> {
    cfg.validate()?;
    if queries.is_empty() {
        return Err(Error::InvalidConfig("run_batch needs at least one query".into()));
    }
    let mut seen = HashSet::with_capacity(queries.len());
    if let Some(dup) = queries.iter().find(|q| !seen.insert(q.query_id.as_str())) {
        return Err(Error::MalformedInput(format!("duplicate query_id {}", dup.query_id)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.max_concurrent_queries)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start query workers: {e}")))?;
    let outcomes: Vec<_> = pool.install(|| queries.par_iter().map(|q| execute(engine, cfg, q)).collect());

    let mut result = RunResult {
        run_tag: cfg.run_tag(),
        effective_config: serde_json::to_value(cfg).expect("config serializes"),
        results: Vec::with_capacity(queries.len()),
        traces: Vec::with_capacity(queries.len()),
        failures: Vec::new(),
    };
    for (position, (q, outcome)) in queries.iter().zip(outcomes).enumerate() {
        match outcome {
            Ok((hits, trace)) => {
                result.results.push(QueryResult {
                    query_id: q.query_id.clone(),
                    hits,
                });
                result.traces.push(trace);
            }
            Err((stage, e)) => {
                log::error!("query {} failed at {}: {e}", q.query_id, stage.name());
                result.failures.push(QueryFailure {
                    query_id: q.query_id.clone(),
                    position,
                    stage,
                    error: e.to_string(),
                });
            }
        }
    }
    Ok(result)
}
