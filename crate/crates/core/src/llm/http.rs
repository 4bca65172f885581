//! OpenAI-compatible `/v1/chat/completions` client.

use std::time::Duration;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::http::{join_url, JsonTransport, RetryPolicy};
use crate::llm::ChatModel;

#[derive(Debug)]
pub struct HttpChat {
    url: String,
    model: String,
    temperature: f64,
    max_tokens: u32,
    transport: JsonTransport,
}

impl HttpChat {
    pub fn new(
        endpoint: &str,
        model: &str,
        temperature: f64,
        max_tokens: u32,
        timeout: Duration,
        retry: RetryPolicy,
    ) -> Result<Self> {
        Ok(HttpChat {
            url: join_url(endpoint, "/v1/chat/completions"),
            model: model.to_owned(),
            temperature,
            max_tokens,
            transport: JsonTransport::new(timeout, retry)?,
        })
    }

    pub(crate) fn request_body(&self, system: &str, user: &str) -> Value {
        json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        })
    }
}

impl ChatModel for HttpChat {
    fn complete(&self, system: &str, user: &str) -> Result<String> {
        let resp = self.transport.post(&self.url, &self.request_body(system, user))?;
        first_choice_text(&resp)
    }
}

pub(crate) fn first_choice_text(resp: &Value) -> Result<String> {
    resp.get("choices")
        .and_then(Value::as_array)
        .and_then(|c| c.first())
        .and_then(|c| c.get("message"))
        .and_then(|m| m.get("content"))
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| Error::Protocol("chat response has no choices[0].message.content".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_first_choice() {
        let resp = json!({"choices": [
            {"index": 0, "message": {"role": "assistant", "content": "hi"}},
            {"index": 1, "message": {"role": "assistant", "content": "other"}}
        ]});
        assert_eq!(first_choice_text(&resp).unwrap(), "hi");
        assert!(matches!(first_choice_text(&json!({"choices": []})), Err(Error::Protocol(_))));
    }
}
