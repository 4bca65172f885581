//! Chat-model client and the two LLM-backed steps of the expansion:
//! query decomposition and query-aware document compression.
//!
//! Three backends sit behind [`ChatModel`]:
//!
//! - `http`: an OpenAI-compatible chat completions endpoint,
//! - `scripted`: replay of a recorded transcript (with optional recording),
//! - `heuristic`: rule-based answers, useful with no model at all.

mod heuristic;
mod http;
mod parse;
mod procedures;
pub mod prompts;
mod transcript;

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use heuristic::{heuristic_split, salient_sentences, split_sentences, HeuristicChat};
pub use http::HttpChat;
pub use parse::parse_subquery_list;
pub use procedures::{
    compress_documents, decompose_query, CompressMode, CompressedDoc, SubQuery, FALLBACK_WORDS,
};
pub use transcript::{ScriptedChat, Transcript};

use crate::error::{Error, Result};
use crate::http::{Limiter, RetryPolicy};

/// A model that answers one system + user message pair.
pub trait ChatModel: Send + Sync {
    fn complete(&self, system: &str, user: &str) -> Result<String>;
}

impl<T: ChatModel + ?Sized> ChatModel for Box<T> {
    fn complete(&self, system: &str, user: &str) -> Result<String> {
        (**self).complete(system, user)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChatBackend {
    Http,
    Scripted,
    #[default]
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChatClientConfig {
    pub backend: ChatBackend,
    pub endpoint_url: Option<String>,
    pub model_name: Option<String>,
    pub transcript_path: Option<PathBuf>,
    /// Scripted backend only: forward misses to the http endpoint and append them.
    pub record: bool,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_concurrent: usize,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
}

impl Default for ChatClientConfig {
    fn default() -> Self {
        ChatClientConfig {
            backend: ChatBackend::Heuristic,
            endpoint_url: None,
            model_name: None,
            transcript_path: None,
            record: false,
            temperature: 0.0,
            max_tokens: 512,
            max_concurrent: 4,
            timeout_secs: 120,
            retry: RetryPolicy::default(),
        }
    }
}

impl ChatClientConfig {
    pub fn heuristic() -> Self {
        Self::default()
    }

    pub fn scripted(transcript_path: impl Into<PathBuf>) -> Self {
        ChatClientConfig {
            backend: ChatBackend::Scripted,
            transcript_path: Some(transcript_path.into()),
            ..Self::default()
        }
    }

    pub fn http(endpoint_url: &str, model_name: &str) -> Self {
        ChatClientConfig {
            backend: ChatBackend::Http,
            endpoint_url: Some(endpoint_url.to_owned()),
            model_name: Some(model_name.to_owned()),
            ..Self::default()
        }
    }

    fn needs_http(&self) -> bool {
        self.backend == ChatBackend::Http || (self.backend == ChatBackend::Scripted && self.record)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::InvalidConfig("llm.temperature must be >= 0".into()));
        }
        if self.max_concurrent == 0 {
            return Err(Error::InvalidConfig("llm.max_concurrent must be >= 1".into()));
        }
        if self.needs_http() {
            if self.endpoint_url.as_deref().is_none_or(str::is_empty) {
                return Err(Error::InvalidConfig("llm.endpoint_url is required for http calls".into()));
            }
            if self.model_name.as_deref().is_none_or(str::is_empty) {
                return Err(Error::InvalidConfig("llm.model_name is required for http calls".into()));
            }
        }
        if self.backend == ChatBackend::Scripted && self.transcript_path.is_none() {
            return Err(Error::InvalidConfig(
                "llm.transcript_path is required for the scripted backend".into(),
            ));
        }
        Ok(())
    }

    fn http_chat(&self) -> Result<HttpChat> {
        HttpChat::new(
            self.endpoint_url.as_deref().unwrap_or_default(),
            self.model_name.as_deref().unwrap_or_default(),
            self.temperature,
            self.max_tokens,
            Duration::from_secs(self.timeout_secs),
            self.retry,
        )
    }
}

/// Thread-safe chat client: bounds in-flight requests and counts calls.
pub struct LlmClient {
    model: Box<dyn ChatModel>,
    limiter: Limiter,
    calls: AtomicUsize,
}

impl std::fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmClient")
            .field("calls", &self.calls())
            .finish_non_exhaustive()
    }
}

impl LlmClient {
    pub fn new(model: impl ChatModel + 'static, max_concurrent: usize) -> Self {
        LlmClient {
            model: Box::new(model),
            limiter: Limiter::new(max_concurrent),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn from_config(cfg: &ChatClientConfig) -> Result<Self> {
        cfg.validate()?;
        let model: Box<dyn ChatModel> = match cfg.backend {
            ChatBackend::Heuristic => Box::new(HeuristicChat),
            ChatBackend::Http => Box::new(cfg.http_chat()?),
            ChatBackend::Scripted => {
                let path = cfg.transcript_path.as_deref().expect("validated");
                if cfg.record {
                    Box::new(ScriptedChat::recording(path, Box::new(cfg.http_chat()?))?)
                } else {
                    Box::new(ScriptedChat::new(Transcript::load(path)?))
                }
            }
        };
        Ok(LlmClient::new(model, cfg.max_concurrent))
    }

    pub fn chat(&self, system: &str, user: &str) -> Result<String> {
        if system.trim().is_empty() || user.trim().is_empty() {
            return Err(Error::InvalidConfig("chat prompts must be non-empty".into()));
        }
        let _permit = self.limiter.acquire();
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.model.complete(system, user)
    }

    /// Requests issued so far, including failed ones.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

/// One-shot convenience: builds a client for `cfg` and sends one request.
pub fn chat(cfg: &ChatClientConfig, system: &str, user: &str) -> Result<String> {
    LlmClient::from_config(cfg)?.chat(system, user)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ChatClientConfig::heuristic().validate().is_ok());
        assert!(ChatClientConfig::default().validate().is_ok());
        let mut cfg = ChatClientConfig::scripted("t.jsonl");
        assert!(cfg.validate().is_ok());
        cfg.record = true;
        assert!(cfg.validate().is_err());
        cfg.transcript_path = None;
        cfg.record = false;
        assert!(cfg.validate().is_err());
        let mut cfg = ChatClientConfig::http("http://x", "m");
        cfg.temperature = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn counts_calls_and_rejects_empty_prompts() {
        let client = LlmClient::new(HeuristicChat, 1);
        client.chat("sys", "Write: hello").unwrap();
        assert_eq!(client.calls(), 1);
        assert!(client.chat("", "x").is_err());
        assert_eq!(client.calls(), 1);
    }

    #[test]
    fn scripted_from_config_reports_missing_file() {
        let cfg = ChatClientConfig::scripted("/nonexistent/transcript.jsonl");
        assert!(matches!(LlmClient::from_config(&cfg), Err(Error::Io { .. })));
    }
}
