use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{Passage, QueryRecord};
use crate::embedding::{build_vector_index, Embedder, Embedding, VectorIndex};
use crate::error::{Error, Result};
use crate::hit::ScoredHit;
use crate::llm::prompts::{GENERATION_SYSTEM_PROMPT, HYDE_INSTRUCTION, QUERY2DOC_INSTRUCTION};
use crate::llm::{compress_documents, decompose_query, CompressMode, CompressedDoc, LlmClient, SubQuery};
use crate::pipeline::run::{LlmCalls, QueryTrace, Stage, SubQueryTrace};
use crate::pipeline::{Method, PipelineConfig};
use crate::sparse::{build_index, Bm25Index, Bm25Params};

/// Indexes and clients shared by every query of a run.
#[derive(Debug)]
pub struct Engine {
    passages: Vec<Passage>,
    by_id: HashMap<String, usize>,
    bm25: Bm25Index,
    vectors: VectorIndex,
    embedder: Embedder,
    llm: LlmClient,
    bm25_calls: AtomicUsize,
}

impl Engine {
    /// Both indexes must cover `passages`, in the same order.
    pub fn new(
        passages: Vec<Passage>,
        bm25: Bm25Index,
        vectors: VectorIndex,
        embedder: Embedder,
        llm: LlmClient,
    ) -> Result<Self> {
        if passages.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let same_bm25 = bm25.num_docs() == passages.len()
            && passages.iter().enumerate().all(|(i, p)| bm25.passage_id(i) == p.passage_id);
        let same_vectors = vectors.len() == passages.len()
            && vectors.passage_ids().iter().zip(&passages).all(|(id, p)| *id == p.passage_id);
        if !same_bm25 || !same_vectors {
            return Err(Error::InvalidConfig(
                "BM25 index, vector index and corpus store cover different passages; rebuild the indexes".into(),
            ));
        }
        if vectors.model() != embedder.model_key() {
            return Err(Error::InvalidConfig(format!(
                "vector index was built with model {:?} but the embedder is {:?}",
                vectors.model(),
                embedder.model_key()
            )));
        }
        let by_id = passages
            .iter()
            .enumerate()
            .map(|(i, p)| (p.passage_id.clone(), i))
            .collect();
        Ok(Engine {
            passages,
            by_id,
            bm25,
            vectors,
            embedder,
            llm,
            bm25_calls: AtomicUsize::new(0),
        })
    }

    /// Builds both indexes in memory.
    pub fn build(passages: Vec<Passage>, params: Bm25Params, embedder: Embedder, llm: LlmClient) -> Result<Self> {
        let bm25 = build_index(&passages, params)?;
        let vectors = build_vector_index(&passages, &embedder)?;
        Engine::new(passages, bm25, vectors, embedder, llm)
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn passage(&self, passage_id: &str) -> Option<&Passage> {
        self.by_id.get(passage_id).map(|&i| &self.passages[i])
    }

    pub fn bm25(&self) -> &Bm25Index {
        &self.bm25
    }

    pub fn vectors(&self) -> &VectorIndex {
        &self.vectors
    }

    pub fn embedder(&self) -> &Embedder {
        &self.embedder
    }

    pub fn llm(&self) -> &LlmClient {
        &self.llm
    }

    /// BM25 searches issued so far.
    pub fn bm25_calls(&self) -> usize {
        self.bm25_calls.load(Ordering::Relaxed)
    }

    fn candidates(&self, query: &str, n: usize) -> Vec<&Passage> {
        self.bm25_calls.fetch_add(1, Ordering::Relaxed);
        self.bm25
            .search(query, n)
            .iter()
            .map(|h| &self.passages[self.by_id[&h.passage_id]])
            .collect()
    }
}

/// The expansion of one query. `candidates` and `compressed` run parallel to
/// `sub_queries`; a sub-query with no BM25 candidates has `compressed == None`
/// and does not contribute to the expansion embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandedQuery {
    pub query_id: String,
    pub original_text: String,
    pub sub_queries: Vec<SubQuery>,
    pub candidates: Vec<Vec<String>>,
    pub compressed: Vec<Option<CompressedDoc>>,
    pub expansion_embedding: Embedding,
}

impl ExpandedQuery {
    /// `sub-query + " " + compressed text` for every contributing sub-query.
    pub fn pair_texts(&self) -> Vec<String> {
        self.sub_queries
            .iter()
            .zip(&self.compressed)
            .filter_map(|(s, c)| c.as_ref().map(|c| pair_text(s, c)))
            .collect()
    }
}

fn pair_text(sub: &SubQuery, comp: &CompressedDoc) -> String {
    format!("{} {}", sub.text, comp.text)
}

/// Unweighted mean of the query embedding and the pair embeddings.
pub fn expansion_embedding(query: &Embedding, pairs: &[Embedding]) -> Result<Embedding> {
    let mut parts = Vec::with_capacity(pairs.len() + 1);
    parts.push(query.clone());
    parts.extend_from_slice(pairs);
    Embedding::mean(&parts)
}

type Staged<T> = std::result::Result<T, (Stage, Error)>;

fn at(stage: Stage) -> impl FnOnce(Error) -> (Stage, Error) {
    move |e| (stage, e)
}

struct Clock {
    enabled: bool,
    timings: BTreeMap<String, u64>,
    last: Instant,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Clock {
            enabled,
            timings: BTreeMap::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: Stage) {
        if self.enabled {
            let now = Instant::now();
            let ms = now.duration_since(self.last).as_millis() as u64;
            *self.timings.entry(stage.name().to_owned()).or_default() += ms;
            self.last = now;
        }
    }

    fn finish(self) -> Option<BTreeMap<String, u64>> {
        self.enabled.then_some(self.timings)
    }
}

fn expand(
    engine: &Engine,
    cfg: &PipelineConfig,
    q: &QueryRecord,
    trace: &mut QueryTrace,
    clock: &mut Clock,
) -> Staged<ExpandedQuery> {
    let ablations = cfg.ablations;
    let sub_queries = if ablations.no_decomposition {
        vec![SubQuery {
            text: q.text.clone(),
            ordinal: 1,
        }]
    } else {
        trace.llm_calls.decompose += 1;
        decompose_query(&engine.llm, &q.text).map_err(at(Stage::Decompose))?
    };
    clock.lap(Stage::Decompose);

    let mode = if ablations.document_wise_compression {
        CompressMode::DocumentWise
    } else {
        CompressMode::Concatenated
    };
    let mut candidates = Vec::with_capacity(sub_queries.len());
    let mut compressed = Vec::with_capacity(sub_queries.len());
    for sub in &sub_queries {
        trace.bm25_calls += 1;
        let docs = engine.candidates(&sub.text, cfg.n);
        clock.lap(Stage::Retrieve);
        let ids: Vec<String> = docs.iter().map(|p| p.passage_id.clone()).collect();
        let comp = if docs.is_empty() {
            log::warn!("query {}: sub-query {} has no BM25 candidates; skipped", q.query_id, sub.ordinal);
            None
        } else if ablations.no_compression {
            let texts: Vec<&str> = docs.iter().map(|p| p.text.as_str()).collect();
            Some(CompressedDoc {
                text: texts.join(" "),
                sub_query_ordinal: sub.ordinal,
                source_passage_ids: ids.clone(),
                fallback: false,
            })
        } else {
            trace.llm_calls.compress += match mode {
                CompressMode::Concatenated => 1,
                CompressMode::DocumentWise => docs.len(),
            };
            Some(compress_documents(&engine.llm, sub, &docs, mode).map_err(at(Stage::Compress))?)
        };
        clock.lap(Stage::Compress);
        trace.sub_queries.push(SubQueryTrace {
            ordinal: sub.ordinal,
            text: sub.text.clone(),
            candidates: ids.clone(),
            compressed: comp.as_ref().map(|c| c.text.clone()),
            compression_fallback: comp.as_ref().is_some_and(|c| c.fallback),
        });
        candidates.push(ids);
        compressed.push(comp);
    }

    let pairs: Vec<String> = sub_queries
        .iter()
        .zip(&compressed)
        .filter_map(|(s, c)| c.as_ref().map(|c| pair_text(s, c)))
        .collect();
    let expansion = if ablations.concat_embedding {
        let mut text = q.text.clone();
        for p in &pairs {
            text.push(' ');
            text.push_str(p);
        }
        engine.embedder.embed_query(&text).map_err(at(Stage::Embed))?
    } else {
        let mut texts = Vec::with_capacity(pairs.len() + 1);
        texts.push(q.text.as_str());
        texts.extend(pairs.iter().map(String::as_str));
        let embeddings = engine.embedder.embed_queries(&texts).map_err(at(Stage::Embed))?;
        expansion_embedding(&embeddings[0], &embeddings[1..]).map_err(at(Stage::Embed))?
    };
    clock.lap(Stage::Embed);
    Ok(ExpandedQuery {
        query_id: q.query_id.clone(),
        original_text: q.text.clone(),
        sub_queries,
        candidates,
        compressed,
        expansion_embedding: expansion,
    })
}

fn generate(engine: &Engine, instruction: &str, q: &QueryRecord, trace: &mut QueryTrace) -> Staged<String> {
    trace.llm_calls.generate += 1;
    let text = engine
        .llm
        .chat(GENERATION_SYSTEM_PROMPT, &format!("{instruction}{}", q.text))
        .map_err(at(Stage::Generate))?;
    let text = text.trim().to_owned();
    if text.is_empty() {
        log::warn!("query {}: generated passage is empty; using the query alone", q.query_id);
    }
    trace.generated = Some(text.clone());
    Ok(text)
}

/// Runs one query and records what it did.
pub(crate) fn execute(
    engine: &Engine,
    cfg: &PipelineConfig,
    q: &QueryRecord,
) -> Staged<(Vec<ScoredHit>, QueryTrace)> {
    if q.text.trim().is_empty() {
        return Err((Stage::Embed, Error::MalformedInput(format!("query {} is empty", q.query_id))));
    }
    let mut trace = QueryTrace {
        query_id: q.query_id.clone(),
        method: cfg.method,
        sub_queries: Vec::new(),
        generated: None,
        llm_calls: LlmCalls::default(),
        bm25_calls: 0,
        num_hits: 0,
        timing_ms: None,
    };
    let mut clock = Clock::new(cfg.trace_timings);
    let embed = |text: &str| engine.embedder.embed_query(text).map_err(at(Stage::Embed));
    let query_vector = if cfg.is_unexpanded() {
        embed(&q.text)?
    } else {
        match cfg.method {
            Method::Decor => expand(engine, cfg, q, &mut trace, &mut clock)?.expansion_embedding,
            Method::Hyde => {
                let passage = generate(engine, HYDE_INSTRUCTION, q, &mut trace)?;
                clock.lap(Stage::Generate);
                if passage.is_empty() {
                    embed(&q.text)?
                } else {
                    let e = engine
                        .embedder
                        .embed_queries(&[q.text.as_str(), passage.as_str()])
                        .map_err(at(Stage::Embed))?;
                    Embedding::mean(&e).map_err(at(Stage::Embed))?
                }
            }
            Method::Query2doc => {
                let passage = generate(engine, QUERY2DOC_INSTRUCTION, q, &mut trace)?;
                clock.lap(Stage::Generate);
                if passage.is_empty() {
                    embed(&q.text)?
                } else {
                    embed(&format!("{} {passage}", q.text))?
                }
            }
            Method::Plain => unreachable!("plain is unexpanded"),
        }
    };
    clock.lap(Stage::Embed);
    let hits = engine
        .vectors
        .search(&query_vector, cfg.k)
        .map_err(at(Stage::Search))?;
    clock.lap(Stage::Search);
    trace.num_hits = hits.len();
    trace.timing_ms = clock.finish();
    Ok((hits, trace))
}

/// The expansion for one query; `cfg.method` must be decor.
pub fn expand_decor(engine: &Engine, cfg: &PipelineConfig, q: &QueryRecord) -> Result<ExpandedQuery> {
    cfg.validate()?;
    if cfg.method != Method::Decor {
        return Err(Error::InvalidConfig(format!("expand_decor called with method {}", cfg.method)));
    }
    if cfg.ablations.no_expansion {
        return Err(Error::InvalidConfig("expand_decor called with no_expansion".into()));
    }
    let mut trace = QueryTrace::empty(&q.query_id, cfg.method);
    let mut clock = Clock::new(false);
    expand(engine, cfg, q, &mut trace, &mut clock).map_err(|(_, e)| e)
}

/// Final top-`k` ranking for one query.
pub fn run_query(engine: &Engine, cfg: &PipelineConfig, q: &QueryRecord) -> Result<Vec<ScoredHit>> {
    cfg.validate()?;
    execute(engine, cfg, q).map(|(hits, _)| hits).map_err(|(_, e)| e)
}
