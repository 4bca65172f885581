use serde::{Deserialize, Serialize};

use crate::corpus::Passage;
use crate::error::{Error, Result};
use crate::llm::prompts::{compression_message, COMPRESSION_PROMPT, DECOMPOSITION_PROMPT};
use crate::llm::{parse_subquery_list, LlmClient};

/// Number of words of the first candidate used when compression comes back empty.
pub const FALLBACK_WORDS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubQuery {
    pub text: String,
    /// 1-based, contiguous within one decomposition.
    pub ordinal: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressedDoc {
    pub text: String,
    pub sub_query_ordinal: usize,
    pub source_passage_ids: Vec<String>,
    /// True when the model returned nothing usable and the fallback text was used.
    #[serde(default)]
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompressMode {
    /// All candidates in one context, one request.
    #[default]
    Concatenated,
    /// One request per candidate, answers joined by a space.
    DocumentWise,
}

fn sub_queries(texts: Vec<String>) -> Vec<SubQuery> {
    texts
        .into_iter()
        .enumerate()
        .map(|(i, text)| SubQuery { text, ordinal: i + 1 })
        .collect()
}

/// Splits `query` into sub-queries. An unparseable reply yields `[query]`.
pub fn decompose_query(client: &LlmClient, query: &str) -> Result<Vec<SubQuery>> {
    if query.trim().is_empty() {
        return Err(Error::InvalidConfig("cannot decompose an empty query".into()));
    }
    let reply = client.chat(DECOMPOSITION_PROMPT, query)?;
    let parsed = parse_subquery_list(&reply);
    if parsed.is_empty() {
        log::warn!("decomposition reply had no sub-query list; using the original query");
        return Ok(sub_queries(vec![query.to_owned()]));
    }
    Ok(sub_queries(parsed))
}

/// Summarizes `docs` with respect to `sub_query`.
pub fn compress_documents(
    client: &LlmClient,
    sub_query: &SubQuery,
    docs: &[&Passage],
    mode: CompressMode,
) -> Result<CompressedDoc> {
    let first = docs
        .first()
        .ok_or_else(|| Error::InvalidConfig("compress_documents needs at least one document".into()))?;
    let text = match mode {
        CompressMode::Concatenated => {
            let texts: Vec<&str> = docs.iter().map(|p| p.text.as_str()).collect();
            let msg = compression_message(&sub_query.text, &texts);
            client.chat(COMPRESSION_PROMPT, &msg)?.trim().to_owned()
        }
        CompressMode::DocumentWise => {
            let mut parts = Vec::with_capacity(docs.len());
            for p in docs {
                let msg = compression_message(&sub_query.text, &[p.text.as_str()]);
                let reply = client.chat(COMPRESSION_PROMPT, &msg)?;
                let reply = reply.trim();
                if !reply.is_empty() {
                    parts.push(reply.to_owned());
                }
            }
            parts.join(" ")
        }
    };
    let source_passage_ids = docs.iter().map(|p| p.passage_id.clone()).collect();
    if text.is_empty() {
        log::warn!(
            "empty compression for sub-query {}; falling back to the first {FALLBACK_WORDS} words of {}",
            sub_query.ordinal,
            first.passage_id
        );
        let fallback: Vec<&str> = first.text.split_whitespace().take(FALLBACK_WORDS).collect();
        return Ok(CompressedDoc {
            text: fallback.join(" "),
            sub_query_ordinal: sub_query.ordinal,
            source_passage_ids,
            fallback: true,
        });
    }
    Ok(CompressedDoc {
        text,
        sub_query_ordinal: sub_query.ordinal,
        source_passage_ids,
        fallback: false,
    })
}
