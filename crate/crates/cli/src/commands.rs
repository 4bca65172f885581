//! The four subcommands as library functions over an [`AppConfig`].

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use decor::corpus::{
    build_qrels, chunk_corpus, ingest_corpus, ingest_queries, load_corpus_store, save_corpus_store,
    Qrels, QueryRecord,
};
use decor::embedding::{build_vector_index, Embedder, VectorIndex};
use decor::eval::{compare, evaluate, Comparison, MetricReport};
use decor::llm::LlmClient;
use decor::pipeline::{run_batch, Engine, RunResult};
use decor::sparse::{build_index, load_index, save_index};

use crate::config::AppConfig;
use crate::error::{CliError, CliResult, Context};
use crate::layout::Layout;

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub num_docs: usize,
    pub num_passages: usize,
    pub num_queries: usize,
    pub num_gold: usize,
    pub unmatched_facts: usize,
    pub total_facts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexSummary {
    pub num_passages: usize,
    pub num_terms: usize,
    pub dim: usize,
    pub model: String,
}

#[derive(Debug)]
pub struct RunSummary {
    pub result: RunResult,
    pub run_path: PathBuf,
    pub trace_path: PathBuf,
}

#[derive(Debug)]
pub struct EvalSummary {
    pub reports: Vec<MetricReport>,
    pub comparison: Option<Comparison>,
}

fn require(path: PathBuf, producer: &'static str) -> CliResult<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::MissingArtifact { path, producer })
    }
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    let io = |e| decor::Error::Io { path: path.to_path_buf(), source: e };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io).context(|| "creating output directory".into())?;
    }
    fs::write(path, contents).map_err(io).context(|| "writing output".into())
}

fn input_path(cfg: &AppConfig, path: &Option<PathBuf>, key: &str) -> CliResult<PathBuf> {
    let path = path
        .as_ref()
        .ok_or_else(|| CliError::config(key, "is required for ingest"))?;
    let path = cfg.resolve(path);
    if !path.exists() {
        return Err(CliError::config(key, format!("{} does not exist", path.display())));
    }
    Ok(path)
}

fn save_queries(path: &Path, queries: &[QueryRecord]) -> CliResult<()> {
    let mut out = String::new();
    for q in queries {
        out.push_str(&serde_json::to_string(q).expect("query serializes"));
        out.push('\n');
    }
    write(path, &out)
}

fn load_queries(path: &Path) -> CliResult<Vec<QueryRecord>> {
    let corrupt = |reason: String| decor::Error::Corrupt { path: path.to_path_buf(), reason };
    let file = fs::File::open(path)
        .map_err(|e| decor::Error::Io { path: path.to_path_buf(), source: e })
        .context(|| "loading queries".into())?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line
            .map_err(|e| decor::Error::Io { path: path.to_path_buf(), source: e })
            .context(|| "loading queries".into())?;
        if line.trim().is_empty() {
            continue;
        }
        let q = serde_json::from_str(&line)
            .map_err(|e| corrupt(format!("line {}: {e}", i + 1)))
            .context(|| "loading queries".into())?;
        out.push(q);
    }
    Ok(out)
}

/// Reads the raw corpus and queries, chunks, matches evidence, and writes
/// the corpus store, queries, qrels and the unmatched-evidence report.
pub fn cmd_ingest(cfg: &AppConfig) -> CliResult<IngestSummary> {
    cfg.validate()?;
    let layout = Layout::new(cfg.workdir());
    let corpus_path = input_path(cfg, &cfg.paths.corpus, "paths.corpus")?;
    let queries_path = input_path(cfg, &cfg.paths.queries, "paths.queries")?;
    let opts = &cfg.corpus;

    let docs = ingest_corpus(&corpus_path, opts.format)
        .context(|| format!("reading corpus {}", corpus_path.display()))?;
    let passages = chunk_corpus(&docs, opts.chunk_size, opts.overlap).context(|| "chunking corpus".into())?;
    let queries = ingest_queries(&queries_path, opts.question_type.as_deref())
        .context(|| format!("reading queries {}", queries_path.display()))?;
    let (qrels, unmatched) =
        build_qrels(&queries, &passages, opts.fact_matcher).context(|| "matching gold evidence".into())?;
    if !unmatched.unmatched.is_empty() {
        log::warn!(
            "{} of {} evidence facts matched no passage; see {}",
            unmatched.unmatched.len(),
            unmatched.total_facts,
            layout.unmatched().display()
        );
    }

    save_corpus_store(&layout.corpus_dir(), &passages, opts.chunk_size, opts.overlap, docs.len())
        .context(|| "writing corpus store".into())?;
    save_queries(&layout.queries(), &queries)?;
    qrels.save(&layout.qrels()).context(|| "writing qrels".into())?;
    let report = serde_json::to_string_pretty(&unmatched).expect("report serializes");
    write(&layout.unmatched(), &(report + "\n"))?;

    Ok(IngestSummary {
        num_docs: docs.len(),
        num_passages: passages.len(),
        num_queries: queries.len(),
        num_gold: qrels.num_gold(),
        unmatched_facts: unmatched.unmatched.len(),
        total_facts: unmatched.total_facts,
    })
}

/// Builds and saves the BM25 and vector indexes over the corpus store.
pub fn cmd_index(cfg: &AppConfig) -> CliResult<IndexSummary> {
    cfg.validate()?;
    let layout = Layout::new(cfg.workdir());
    require(layout.corpus_header(), "ingest")?;
    let (_, passages) = load_corpus_store(&layout.corpus_dir()).context(|| "loading corpus store".into())?;

    let bm25 = build_index(&passages, cfg.bm25).context(|| "building BM25 index".into())?;
    save_index(&bm25, &layout.bm25_index()).context(|| "writing BM25 index".into())?;

    let embedder = Embedder::new(cfg.embedder_config()).context(|| "starting embedder".into())?;
    let vectors = build_vector_index(&passages, &embedder).context(|| "embedding passages".into())?;
    vectors.save(&layout.vector_index()).context(|| "writing vector index".into())?;

    Ok(IndexSummary {
        num_passages: passages.len(),
        num_terms: bm25.num_terms(),
        dim: vectors.dim(),
        model: vectors.model().to_owned(),
    })
}

/// Loads the indexes written by `index` and the clients named by the config.
pub fn open_engine(cfg: &AppConfig) -> CliResult<Engine> {
    let layout = Layout::new(cfg.workdir());
    require(layout.corpus_header(), "ingest")?;
    let bm25_path = require(layout.bm25_index(), "index")?;
    let vectors_path = require(layout.vector_index(), "index")?;
    let (_, passages) = load_corpus_store(&layout.corpus_dir()).context(|| "loading corpus store".into())?;
    let bm25 = load_index(&bm25_path).context(|| "loading BM25 index".into())?;
    let vectors = VectorIndex::load(&vectors_path).context(|| "loading vector index".into())?;
    let embedder = Embedder::new(cfg.embedder_config()).context(|| "starting embedder".into())?;
    let llm = LlmClient::from_config(&cfg.llm_config()).context(|| "starting chat client".into())?;
    Engine::new(passages, bm25, vectors, embedder, llm).context(|| "opening indexes".into())
}

/// Runs the configured pipeline over every ingested query and writes the
/// run file and trace.
pub fn cmd_run(cfg: &AppConfig) -> CliResult<RunSummary> {
    cfg.validate()?;
    let layout = Layout::new(cfg.workdir());
    let engine = open_engine(cfg)?;
    let queries_path = require(layout.queries(), "ingest")?;
    let queries = load_queries(&queries_path)?;
    let mut result = run_batch(&engine, &cfg.pipeline, &queries).context(|| "running queries".into())?;
    result.effective_config = serde_json::to_value(cfg).expect("config serializes");
    if result.results.is_empty() {
        let first = &result.failures[0];
        return Err(CliError::Core {
            context: format!("every query failed; first was {} at {}", first.query_id, first.stage.name()),
            source: decor::Error::MalformedInput(first.error.clone()),
        });
    }

    let run_path = layout.run_file(&result.run_tag);
    let trace_path = layout.trace_file(&result.run_tag);
    write(&run_path, &result.to_trec())?;
    write(&trace_path, &result.trace_jsonl())?;
    Ok(RunSummary {
        result,
        run_path,
        trace_path,
    })
}

/// Scores each run file and, for several runs, writes a comparison table.
pub fn cmd_eval(cfg: &AppConfig) -> CliResult<EvalSummary> {
    cfg.validate()?;
    let layout = Layout::new(cfg.workdir());
    let qrels_path = match &cfg.eval.qrels {
        Some(p) => require(cfg.resolve(p), "ingest")?,
        None => require(layout.qrels(), "ingest")?,
    };
    let qrels = Qrels::load(&qrels_path).context(|| "loading qrels".into())?;
    let runs: Vec<PathBuf> = if cfg.eval.runs.is_empty() {
        vec![layout.run_file(&cfg.pipeline.run_tag())]
    } else {
        cfg.eval.runs.iter().map(|p| cfg.resolve(p)).collect()
    };

    let mut reports = Vec::with_capacity(runs.len());
    for path in runs {
        let path = require(path, "run")?;
        let report = evaluate(&path, &qrels, &cfg.eval.metrics, cfg.eval.hits_variant, cfg.eval.per_query)
            .context(|| format!("evaluating {}", path.display()))?;
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write(&layout.report_json(&report.run_tag), &(json + "\n"))?;
        write(&layout.report_text(&report.run_tag), &report.to_text())?;
        reports.push(report);
    }
    let comparison = (reports.len() > 1).then(|| compare(&reports));
    if let Some(table) = &comparison {
        write(&layout.comparison("txt"), &table.to_text())?;
        write(&layout.comparison("csv"), &table.to_csv())?;
    }
    Ok(EvalSummary { reports, comparison })
}

/// Writes a one-line-per-item summary for a finished command.
pub(crate) fn print_lines(out: &mut dyn Write, lines: &[String]) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    for l in lines {
        writeln!(w, "{l}")?;
    }
    w.flush()
}
