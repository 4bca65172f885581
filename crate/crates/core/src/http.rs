//! Blocking JSON-over-HTTP transport shared by the chat and embedding clients.

use std::env;
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Environment variable holding the bearer token for both endpoints.
pub const API_KEY_ENV: &str = "DECOR_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff_ms: 500,
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.initial_backoff_ms.saturating_mul(1 << attempt.min(16)))
    }
}

#[derive(Debug)]
pub(crate) struct JsonTransport {
    client: reqwest::blocking::Client,
    api_key: Option<String>,
    retry: RetryPolicy,
}

enum Failure {
    Retryable(String),
    Fatal(String),
}

impl JsonTransport {
    pub(crate) fn new(timeout: Duration, retry: RetryPolicy) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(JsonTransport {
            client,
            api_key: env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            retry,
        })
    }

    /// POSTs `body` and returns the decoded JSON response. Connection failures,
    /// 429 and 5xx are retried with exponential backoff.
    pub(crate) fn post(&self, url: &str, body: &Value) -> Result<Value> {
        let attempts = self.retry.attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(self.retry.backoff(attempt - 1));
            }
            match self.post_once(url, body) {
                Ok(value) => return Ok(value),
                Err(Failure::Fatal(msg)) => return Err(Error::Transport(msg)),
                Err(Failure::Retryable(msg)) => {
                    log::warn!("POST {url} failed (attempt {}/{attempts}): {msg}", attempt + 1);
                    last = msg;
                }
            }
        }
        Err(Error::Transport(format!("{url}: {last} after {attempts} attempts")))
    }

    fn post_once(&self, url: &str, body: &Value) -> std::result::Result<Value, Failure> {
        let mut req = self.client.post(url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Failure::Retryable(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Failure::Retryable(e.to_string()))?;
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Failure::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Failure::Fatal(format!("{url}: HTTP {status}: {}", snippet(&text))));
        }
        serde_json::from_str(&text)
            .map_err(|e| Failure::Fatal(format!("{url}: response is not JSON: {e}")))
    }
}

fn snippet(text: &str) -> &str {
    let end = text.char_indices().nth(200).map_or(text.len(), |(i, _)| i);
    &text[..end]
}

pub(crate) fn join_url(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'))
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
pub(crate) struct Limiter {
    max: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

pub(crate) struct Permit<'a>(&'a Limiter);

impl Limiter {
    pub(crate) fn new(max: usize) -> Self {
        Limiter {
            max: max.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub(crate) fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}
