//! Text encoders, cosine relevance and the passage vector index.
//!
//! An [`Embedder`] wraps one backend (an OpenAI-compatible HTTP endpoint or
//! the deterministic [`mock_hashed_bow`] encoder) behind an optional
//! [`EmbeddingCache`]. Query-side texts and passages may carry different
//! model-specific prefixes (`"query: "` / `"passage: "` style); both default
//! to empty.

mod cache;
mod http;
mod index;
mod mock;
mod vector;

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use cache::EmbeddingCache;
pub use index::{build_vector_index, dense_search, VectorIndex, VECTOR_FORMAT_VERSION};
pub use mock::mock_hashed_bow;
pub use vector::{cosine, Embedding};

use crate::error::{Error, Result};
use crate::http::RetryPolicy;
use http::HttpEncoder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderBackend {
    Http,
    #[default]
    MockHashedBow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedderConfig {
    pub backend: EmbedderBackend,
    pub endpoint_url: Option<String>,
    pub model_name: Option<String>,
    pub dim: Option<usize>,
    pub batch_size: usize,
    pub max_concurrent: usize,
    pub query_prefix: String,
    pub passage_prefix: String,
    pub cache_path: Option<PathBuf>,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig {
            backend: EmbedderBackend::MockHashedBow,
            endpoint_url: None,
            model_name: None,
            dim: Some(512),
            batch_size: 32,
            max_concurrent: 4,
            query_prefix: String::new(),
            passage_prefix: String::new(),
            cache_path: None,
            timeout_secs: 120,
            retry: RetryPolicy::default(),
        }
    }
}

impl EmbedderConfig {
    pub fn mock(dim: usize) -> Self {
        EmbedderConfig {
            dim: Some(dim),
            ..Self::default()
        }
    }

    pub fn http(endpoint_url: &str, model_name: &str) -> Self {
        EmbedderConfig {
            backend: EmbedderBackend::Http,
            endpoint_url: Some(endpoint_url.to_owned()),
            model_name: Some(model_name.to_owned()),
            dim: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("embedder.batch_size must be >= 1".into()));
        }
        if self.max_concurrent == 0 {
            return Err(Error::InvalidConfig("embedder.max_concurrent must be >= 1".into()));
        }
        match self.backend {
            EmbedderBackend::Http => {
                if self.endpoint_url.as_deref().is_none_or(str::is_empty) {
                    return Err(Error::InvalidConfig(
                        "embedder.endpoint_url is required for the http backend".into(),
                    ));
                }
                if self.model_name.as_deref().is_none_or(str::is_empty) {
                    return Err(Error::InvalidConfig(
                        "embedder.model_name is required for the http backend".into(),
                    ));
                }
            }
            EmbedderBackend::MockHashedBow => match self.dim {
                Some(d) if d >= 2 => {}
                _ => {
                    return Err(Error::InvalidConfig(
                        "embedder.dim >= 2 is required for the mock backend".into(),
                    ))
                }
            },
        }
        Ok(())
    }
}

#[derive(Debug)]
enum Backend {
    Mock { dim: usize },
    Http(HttpEncoder),
}

#[derive(Debug)]
pub struct Embedder {
    cfg: EmbedderConfig,
    model_key: String,
    backend: Backend,
    cache: Arc<EmbeddingCache>,
    encoded: AtomicUsize,
}

impl Embedder {
    /// Builds the backend and opens `cfg.cache_path` when set.
    pub fn new(cfg: EmbedderConfig) -> Result<Self> {
        let cache = match &cfg.cache_path {
            Some(path) => EmbeddingCache::open(path)?,
            None => EmbeddingCache::in_memory(),
        };
        Self::with_cache(cfg, Arc::new(cache))
    }

    pub fn with_cache(cfg: EmbedderConfig, cache: Arc<EmbeddingCache>) -> Result<Self> {
        cfg.validate()?;
        let (backend, default_key) = match cfg.backend {
            EmbedderBackend::MockHashedBow => {
                let dim = cfg.dim.expect("validated");
                (Backend::Mock { dim }, format!("mock-hashed-bow-{dim}"))
            }
            EmbedderBackend::Http => {
                let model = cfg.model_name.clone().expect("validated");
                let encoder = HttpEncoder::new(
                    cfg.endpoint_url.as_deref().expect("validated"),
                    &model,
                    Duration::from_secs(cfg.timeout_secs),
                    cfg.retry,
                )?;
                (Backend::Http(encoder), model)
            }
        };
        let model_key = match (&cfg.backend, &cfg.model_name) {
            (EmbedderBackend::MockHashedBow, Some(name)) if !name.is_empty() => name.clone(),
            _ => default_key,
        };
        Ok(Embedder {
            cfg,
            model_key,
            backend,
            cache,
            encoded: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &EmbedderConfig {
        &self.cfg
    }

    /// Model name used as the cache key and recorded in vector index files.
    pub fn model_key(&self) -> &str {
        &self.model_key
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }

    /// Number of texts sent to the backend so far (cache hits excluded).
    pub fn encoded_count(&self) -> usize {
        self.encoded.load(Ordering::Relaxed)
    }

    pub fn embed_queries<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<Embedding>> {
        self.embed_with_prefix(texts, &self.cfg.query_prefix)
    }

    pub fn embed_passages<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<Embedding>> {
        self.embed_with_prefix(texts, &self.cfg.passage_prefix)
    }

    pub fn embed_query(&self, text: &str) -> Result<Embedding> {
        Ok(self.embed_queries(&[text])?.remove(0))
    }

    fn embed_with_prefix<S: AsRef<str>>(&self, texts: &[S], prefix: &str) -> Result<Vec<Embedding>> {
        if prefix.is_empty() {
            return self.embed(texts);
        }
        for (i, t) in texts.iter().enumerate() {
            if t.as_ref().trim().is_empty() {
                return Err(Error::EmptyText(i));
            }
        }
        let prefixed: Vec<String> = texts.iter().map(|t| format!("{prefix}{}", t.as_ref())).collect();
        self.embed(&prefixed)
    }

    /// One embedding per input, in input order.
    pub fn embed<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<Embedding>> {
        if texts.is_empty() {
            return Err(Error::InvalidConfig("embed called with no texts".into()));
        }
        let texts: Vec<&str> = texts.iter().map(AsRef::as_ref).collect();
        if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
            return Err(Error::EmptyText(i));
        }
        let mut out: Vec<Option<Embedding>> =
            texts.iter().map(|t| self.cache.get(&self.model_key, t)).collect();
        let mut missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        // identical texts in one call are encoded once
        let mut seen = std::collections::HashSet::new();
        missing.retain(|&i| seen.insert(texts[i]));
        if !missing.is_empty() {
            let batch: Vec<&str> = missing.iter().map(|&i| texts[i]).collect();
            let fresh = self.encode(&batch)?;
            self.encoded.fetch_add(batch.len(), Ordering::Relaxed);
            let pairs: Vec<(&str, &Embedding)> = batch.iter().copied().zip(&fresh).collect();
            self.cache.insert_many(&self.model_key, &pairs)?;
            for (text, emb) in batch.iter().zip(&fresh) {
                for (slot, t) in out.iter_mut().zip(&texts) {
                    if slot.is_none() && t == text {
                        *slot = Some(emb.clone());
                    }
                }
            }
        }
        Ok(out.into_iter().map(|e| e.expect("every slot filled")).collect())
    }

    fn encode(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        match &self.backend {
            Backend::Mock { dim } => Ok(texts.iter().map(|t| mock_hashed_bow(t, *dim)).collect()),
            Backend::Http(encoder) => {
                let batches: Vec<&[&str]> = texts.chunks(self.cfg.batch_size).collect();
                let workers = self.cfg.max_concurrent.min(batches.len());
                if workers <= 1 {
                    let mut out = Vec::with_capacity(texts.len());
                    for b in &batches {
                        out.extend(encoder.embed_batch(b)?);
                    }
                    return Ok(out);
                }
                let next = AtomicUsize::new(0);
                let mut results: Vec<Option<Result<Vec<Embedding>>>> =
                    (0..batches.len()).map(|_| None).collect();
                let collected = std::sync::Mutex::new(&mut results);
                thread::scope(|s| {
                    for _ in 0..workers {
                        s.spawn(|| loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            let Some(batch) = batches.get(i) else { break };
                            let r = encoder.embed_batch(batch);
                            collected.lock().unwrap_or_else(|e| e.into_inner())[i] = Some(r);
                        });
                    }
                });
                let mut out = Vec::with_capacity(texts.len());
                for r in results {
                    out.extend(r.expect("every batch ran")?);
                }
                Ok(out)
            }
        }
    }
}

/// Convenience wrapper: builds an [`Embedder`] for `cfg` and embeds `texts`.
pub fn embed_texts<S: AsRef<str>>(cfg: &EmbedderConfig, texts: &[S]) -> Result<Vec<Embedding>> {
    Embedder::new(cfg.clone())?.embed(texts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_is_deterministic() {
        let cfg = EmbedderConfig::mock(8);
        let a = embed_texts(&cfg, &["same string"]).unwrap();
        let b = embed_texts(&cfg, &["same string"]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_text_rejected_with_position() {
        let cfg = EmbedderConfig::mock(8);
        assert!(matches!(embed_texts(&cfg, &["ok", "  "]), Err(Error::EmptyText(1))));
    }

    #[test]
    fn config_validation() {
        assert!(EmbedderConfig::mock(1).validate().is_err());
        let mut http = EmbedderConfig::http("http://localhost:1", "m");
        assert!(http.validate().is_ok());
        http.model_name = None;
        assert!(http.validate().is_err());
        let mut cfg = EmbedderConfig::mock(8);
        cfg.batch_size = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn cache_hits_skip_the_backend() {
        let embedder = Embedder::new(EmbedderConfig::mock(16)).unwrap();
        let cold = embedder.embed(&["a b", "c d", "a b"]).unwrap();
        assert_eq!(embedder.encoded_count(), 2);
        let warm = embedder.embed(&["c d", "a b"]).unwrap();
        assert_eq!(embedder.encoded_count(), 2);
        assert_eq!(warm, vec![cold[1].clone(), cold[0].clone()]);
    }

    #[test]
    fn prefixes_change_the_encoded_text() {
        let mut cfg = EmbedderConfig::mock(64);
        cfg.query_prefix = "query: ".into();
        cfg.passage_prefix = "passage: ".into();
        let e = Embedder::new(cfg).unwrap();
        assert_eq!(e.embed_query("red cat").unwrap(), mock_hashed_bow("query: red cat", 64));
        assert_eq!(
            e.embed_passages(&["red cat"]).unwrap()[0],
            mock_hashed_bow("passage: red cat", 64)
        );
    }
}
