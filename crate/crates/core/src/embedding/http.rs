//! OpenAI-compatible `/v1/embeddings` client.

use std::time::Duration;

use serde_json::{json, Value};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::http::{join_url, JsonTransport, RetryPolicy};

#[derive(Debug)]
pub(crate) struct HttpEncoder {
    url: String,
    model: String,
    transport: JsonTransport,
}

impl HttpEncoder {
    pub(crate) fn new(endpoint: &str, model: &str, timeout: Duration, retry: RetryPolicy) -> Result<Self> {
        Ok(HttpEncoder {
            url: join_url(endpoint, "/v1/embeddings"),
            model: model.to_owned(),
            transport: JsonTransport::new(timeout, retry)?,
        })
    }

    pub(crate) fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        let body = json!({ "model": self.model, "input": texts });
        let resp = self.transport.post(&self.url, &body)?;
        parse_embeddings_response(&resp, texts.len())
    }
}

pub(crate) fn parse_embeddings_response(resp: &Value, expected: usize) -> Result<Vec<Embedding>> {
    let data = resp
        .get("data")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Protocol("embeddings response has no `data` array".into()))?;
    if data.len() != expected {
        return Err(Error::Protocol(format!(
            "requested {expected} embeddings, received {}",
            data.len()
        )));
    }
    let mut slots: Vec<Option<Embedding>> = vec![None; expected];
    for (pos, item) in data.iter().enumerate() {
        let index = match item.get("index") {
            Some(v) => v
                .as_u64()
                .ok_or_else(|| Error::Protocol(format!("data[{pos}].index is not an integer")))?
                as usize,
            None => pos,
        };
        let values = item
            .get("embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Protocol(format!("data[{pos}] has no embedding")))?
            .iter()
            .map(|v| v.as_f64())
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Error::Protocol(format!("data[{pos}].embedding holds a non-number")))?;
        let slot = slots
            .get_mut(index)
            .ok_or_else(|| Error::Protocol(format!("data[{pos}].index {index} out of range")))?;
        if slot.is_some() {
            return Err(Error::Protocol(format!("duplicate embedding index {index}")));
        }
        *slot = Some(Embedding::new(values)?);
    }
    let out: Vec<Embedding> = slots.into_iter().map(|s| s.expect("all slots filled")).collect();
    if let Some(first) = out.first() {
        if let Some(bad) = out.iter().find(|e| e.dim() != first.dim()) {
            return Err(Error::DimMismatch {
                left: first.dim(),
                right: bad.dim(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reorders_by_index() {
        let resp = json!({"data": [
            {"index": 1, "embedding": [0.0, 1.0]},
            {"index": 0, "embedding": [1.0, 0.0]}
        ]});
        let out = parse_embeddings_response(&resp, 2).unwrap();
        assert_eq!(out[0].values(), [1.0, 0.0]);
        assert_eq!(out[1].values(), [0.0, 1.0]);
    }

    #[test]
    fn wrong_count_is_protocol_error() {
        let resp = json!({"data": [
            {"index": 0, "embedding": [1.0]}, {"index": 1, "embedding": [1.0]}
        ]});
        assert!(matches!(parse_embeddings_response(&resp, 3), Err(Error::Protocol(_))));
        assert!(matches!(parse_embeddings_response(&json!({}), 1), Err(Error::Protocol(_))));
    }

    #[test]
    fn duplicate_index_rejected() {
        let resp = json!({"data": [
            {"index": 0, "embedding": [1.0]}, {"index": 0, "embedding": [1.0]}
        ]});
        assert!(matches!(parse_embeddings_response(&resp, 2), Err(Error::Protocol(_))));
    }
}
