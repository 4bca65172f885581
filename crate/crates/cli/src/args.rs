//! Command-line flags. Each flag overrides the config key named in its help.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use decor::corpus::{FactMatcher, InputFormat};
use decor::embedding::EmbedderBackend;
use decor::eval::{HitsVariant, MetricSpec};
use decor::llm::ChatBackend;
use decor::pipeline::{Ablation, Method};

use crate::config::AppConfig;

#[derive(Debug, Parser)]
#[command(
    name = "decor",
    version,
    about = "Multi-hop passage retrieval with LLM query decomposition and compression-based expansion",
    after_help = "The API key for HTTP backends is read from DECOR_API_KEY."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON config file; every key is optional.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [paths.workdir].
    #[arg(long, global = true)]
    pub workdir: Option<PathBuf>,
    /// Log more (-v info, -vv debug).
    #[arg(long, short, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load documents and queries, chunk passages, and derive qrels.
    Ingest(IngestArgs),
    /// Build the BM25 and vector indexes.
    Index(IndexArgs),
    /// Retrieve for every ingested query and write a run file and trace.
    Run(RunArgs),
    /// Score run files against the qrels.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Document collection JSON [paths.corpus].
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Query set JSON [paths.queries].
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Input layout [corpus.format].
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Words per passage, 0 for whole documents [corpus.chunk_size].
    #[arg(long)]
    pub chunk_size: Option<usize>,
    /// Words shared by consecutive passages [corpus.overlap].
    #[arg(long)]
    pub overlap: Option<usize>,
    /// Keep only queries of this type [corpus.question_type].
    #[arg(long)]
    pub question_type: Option<String>,
    /// Evidence matching rule [corpus.fact_matcher].
    #[arg(long, value_enum)]
    pub fact_matcher: Option<MatcherArg>,
}

#[derive(Debug, Args)]
pub struct EmbedderArgs {
    /// Encoder backend [embedder.backend].
    #[arg(long, value_enum)]
    pub embedder: Option<EmbedderArg>,
    /// OpenAI-compatible base URL [embedder.endpoint_url].
    #[arg(long)]
    pub embedder_url: Option<String>,
    /// Model name [embedder.model_name].
    #[arg(long)]
    pub embedder_model: Option<String>,
    /// Dimension of the mock encoder [embedder.dim].
    #[arg(long)]
    pub embedder_dim: Option<usize>,
    /// Texts per request [embedder.batch_size].
    #[arg(long)]
    pub embedder_batch_size: Option<usize>,
    /// JSONL embedding cache [embedder.cache_path].
    #[arg(long)]
    pub embedding_cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// BM25 term saturation [bm25.k1].
    #[arg(long)]
    pub k1: Option<f64>,
    /// BM25 length normalization [bm25.b].
    #[arg(long)]
    pub b: Option<f64>,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Retrieval method [pipeline.method].
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Ablation switch, repeatable [pipeline.ablations.*].
    #[arg(long, value_enum)]
    pub ablation: Vec<AblationArg>,
    /// Name used in the run file and output names [pipeline.run_tag].
    #[arg(long)]
    pub run_tag: Option<String>,
    /// BM25 candidates per sub-query [pipeline.n].
    #[arg(long)]
    pub n: Option<usize>,
    /// Hits per query [pipeline.k].
    #[arg(long)]
    pub k: Option<usize>,
    /// Queries in flight [pipeline.max_concurrent_queries].
    #[arg(long)]
    pub max_concurrent_queries: Option<usize>,
    /// Record per-stage wall-clock times in the trace [pipeline.trace_timings].
    #[arg(long)]
    pub trace_timings: bool,
    /// Chat backend [llm.backend].
    #[arg(long, value_enum)]
    pub llm: Option<LlmArg>,
    /// OpenAI-compatible base URL [llm.endpoint_url].
    #[arg(long)]
    pub llm_url: Option<String>,
    /// Model name [llm.model_name].
    #[arg(long)]
    pub llm_model: Option<String>,
    /// Recorded responses for the scripted backend [llm.transcript_path].
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Forward transcript misses to the HTTP endpoint and append them [llm.record].
    #[arg(long)]
    pub record: bool,
    /// Sampling temperature [llm.temperature].
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Completion length limit [llm.max_tokens].
    #[arg(long)]
    pub max_tokens: Option<u32>,
    /// Chat requests in flight [llm.max_concurrent].
    #[arg(long)]
    pub llm_max_concurrent: Option<usize>,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Run file, repeatable [eval.runs]; defaults to the configured run tag.
    #[arg(long)]
    pub run: Vec<PathBuf>,
    /// Qrels file [eval.qrels].
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// Metric such as hits@10, map@10, mrr@10; repeatable [eval.metrics].
    #[arg(long)]
    pub metric: Vec<MetricSpec>,
    /// Hits averaging [eval.hits_variant].
    #[arg(long, value_enum)]
    pub hits_variant: Option<HitsArg>,
    /// Include per-query values in the JSON report [eval.per_query].
    #[arg(long)]
    pub per_query: bool,
}

macro_rules! value_enum {
    ($arg:ident => $target:ty { $($variant:ident => $value:expr),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
        #[value(rename_all = "snake_case")]
        pub enum $arg { $($variant),+ }

        impl From<$arg> for $target {
            fn from(a: $arg) -> Self {
                match a { $($arg::$variant => $value),+ }
            }
        }
    };
}

value_enum!(FormatArg => InputFormat { MultihopRag => InputFormat::MultihopRag, GenericJson => InputFormat::GenericJson });
value_enum!(MatcherArg => FactMatcher {
    NormalizedSubstring => FactMatcher::NormalizedSubstring,
    Exact => FactMatcher::Exact,
});
value_enum!(EmbedderArg => EmbedderBackend { Http => EmbedderBackend::Http, MockHashedBow => EmbedderBackend::MockHashedBow });
value_enum!(LlmArg => ChatBackend { Http => ChatBackend::Http, Scripted => ChatBackend::Scripted, Heuristic => ChatBackend::Heuristic });
value_enum!(MethodArg => Method {
    Decor => Method::Decor,
    Plain => Method::Plain,
    Hyde => Method::Hyde,
    Query2doc => Method::Query2doc,
});
value_enum!(AblationArg => Ablation {
    NoDecomposition => Ablation::NoDecomposition,
    NoCompression => Ablation::NoCompression,
    DocumentWiseCompression => Ablation::DocumentWiseCompression,
    ConcatEmbedding => Ablation::ConcatEmbedding,
    NoExpansion => Ablation::NoExpansion,
});
value_enum!(HitsArg => HitsVariant { Micro => HitsVariant::Micro, Macro => HitsVariant::Macro });

fn set<T>(slot: &mut T, value: Option<impl Into<T>>) {
    if let Some(v) = value {
        *slot = v.into();
    }
}

/// Flag paths are relative to the current directory, not the config file.
fn cwd_relative(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    std::env::current_dir().map_or_else(|_| path.to_path_buf(), |d| d.join(path))
}

fn set_path(slot: &mut Option<PathBuf>, value: &Option<PathBuf>) {
    if let Some(v) = value {
        *slot = Some(cwd_relative(v));
    }
}

fn set_some<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

impl GlobalArgs {
    pub fn apply(&self, cfg: &mut AppConfig) {
        if let Some(w) = &self.workdir {
            cfg.paths.workdir = cwd_relative(w);
        }
    }
}

impl IngestArgs {
    pub fn apply(&self, cfg: &mut AppConfig) {
        set_path(&mut cfg.paths.corpus, &self.corpus);
        set_path(&mut cfg.paths.queries, &self.queries);
        set(&mut cfg.corpus.format, self.format);
        set(&mut cfg.corpus.chunk_size, self.chunk_size);
        set(&mut cfg.corpus.overlap, self.overlap);
        set_some(&mut cfg.corpus.question_type, self.question_type.clone());
        set(&mut cfg.corpus.fact_matcher, self.fact_matcher);
    }
}

impl EmbedderArgs {
    pub fn apply(&self, cfg: &mut AppConfig) {
        let e = &mut cfg.embedder;
        set(&mut e.backend, self.embedder);
        set_some(&mut e.endpoint_url, self.embedder_url.clone());
        set_some(&mut e.model_name, self.embedder_model.clone());
        set_some(&mut e.dim, self.embedder_dim);
        set(&mut e.batch_size, self.embedder_batch_size);
        set_path(&mut e.cache_path, &self.embedding_cache);
    }
}

impl IndexArgs {
    pub fn apply(&self, cfg: &mut AppConfig) {
        set(&mut cfg.bm25.k1, self.k1);
        set(&mut cfg.bm25.b, self.b);
        self.embedder.apply(cfg);
    }
}

impl RunArgs {
    pub fn apply(&self, cfg: &mut AppConfig) {
        let p = &mut cfg.pipeline;
        set(&mut p.method, self.method);
        for a in &self.ablation {
            p.ablations.set((*a).into());
        }
        set_some(&mut p.run_tag, self.run_tag.clone());
        set(&mut p.n, self.n);
        set(&mut p.k, self.k);
        set(&mut p.max_concurrent_queries, self.max_concurrent_queries);
        p.trace_timings |= self.trace_timings;
        let l = &mut cfg.llm;
        set(&mut l.backend, self.llm);
        set_some(&mut l.endpoint_url, self.llm_url.clone());
        set_some(&mut l.model_name, self.llm_model.clone());
        set_path(&mut l.transcript_path, &self.transcript);
        l.record |= self.record;
        set(&mut l.temperature, self.temperature);
        set(&mut l.max_tokens, self.max_tokens);
        set(&mut l.max_concurrent, self.llm_max_concurrent);
        self.embedder.apply(cfg);
    }
}

impl EvalArgs {
    pub fn apply(&self, cfg: &mut AppConfig) {
        if !self.run.is_empty() {
            cfg.eval.runs = self.run.iter().map(|p| cwd_relative(p)).collect();
        }
        set_path(&mut cfg.eval.qrels, &self.qrels);
        if !self.metric.is_empty() {
            cfg.eval.metrics = self.metric.clone();
        }
        set(&mut cfg.eval.hits_variant, self.hits_variant);
        cfg.eval.per_query |= self.per_query;
    }
}
