//! The JSON config file. Every key has a default; relative paths resolve
//! against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use decor::corpus::{FactMatcher, InputFormat, DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP};
use decor::embedding::EmbedderConfig;
use decor::eval::{HitsVariant, MetricSpec};
use decor::llm::ChatClientConfig;
use decor::pipeline::PipelineConfig;
use decor::sparse::Bm25Params;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub workdir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            corpus: None,
            queries: None,
            workdir: PathBuf::from("work"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusOptions {
    pub format: InputFormat,
    /// Words per passage; 0 keeps each document whole.
    pub chunk_size: usize,
    pub overlap: usize,
    /// Keep only queries of this `question_type`.
    pub question_type: Option<String>,
    pub fact_matcher: FactMatcher,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions {
            format: InputFormat::MultihopRag,
            chunk_size: DEFAULT_CHUNK_SIZE,
            overlap: DEFAULT_OVERLAP,
            question_type: None,
            fact_matcher: FactMatcher::NormalizedSubstring,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalOptions {
    pub metrics: Vec<MetricSpec>,
    pub hits_variant: HitsVariant,
    pub per_query: bool,
    /// Run files to score; empty means the run named by `pipeline`.
    pub runs: Vec<PathBuf>,
    /// Defaults to the qrels written by `ingest`.
    pub qrels: Option<PathBuf>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            metrics: MetricSpec::defaults(),
            hits_variant: HitsVariant::Micro,
            per_query: false,
            runs: Vec::new(),
            qrels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppConfig {
    pub paths: PathsConfig,
    pub corpus: CorpusOptions,
    pub bm25: Bm25Params,
    pub embedder: EmbedderConfig,
    pub llm: ChatClientConfig,
    pub pipeline: PipelineConfig,
    pub eval: EvalOptions,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl AppConfig {
    /// Parses a config file, reporting the offending key on failure.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            CliError::config(if key == "." { "<root>".to_owned() } else { key }, e.into_inner())
        })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn workdir(&self) -> PathBuf {
        self.resolve(&self.paths.workdir)
    }

    pub fn validate(&self) -> CliResult<()> {
        let check = |key: &str, r: decor::Result<()>| {
            r.map_err(|e| match e {
                decor::Error::InvalidConfig(msg) => CliError::config(key, msg),
                other => CliError::config(key, other),
            })
        };
        if self.corpus.chunk_size > 0 && self.corpus.overlap >= self.corpus.chunk_size {
            return Err(CliError::config("corpus.overlap", "must be smaller than corpus.chunk_size"));
        }
        check("bm25", self.bm25.validate())?;
        check("embedder", self.embedder.validate())?;
        check("llm", self.llm.validate())?;
        check("pipeline", self.pipeline.validate())?;
        if self.eval.metrics.is_empty() {
            return Err(CliError::config("eval.metrics", "at least one metric is required"));
        }
        Ok(())
    }

    /// Embedder settings with the cache path resolved.
    pub fn embedder_config(&self) -> EmbedderConfig {
        let mut cfg = self.embedder.clone();
        cfg.cache_path = cfg.cache_path.map(|p| self.resolve(&p));
        cfg
    }

    /// Chat settings with the transcript path resolved.
    pub fn llm_config(&self) -> ChatClientConfig {
        let mut cfg = self.llm.clone();
        cfg.transcript_path = cfg.transcript_path.map(|p| self.resolve(&p));
        cfg
    }
}
