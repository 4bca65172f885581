mod common;

use common::MockServer;
use decor::embedding::{Embedder, EmbedderConfig};
use decor::http::RetryPolicy;
use decor::llm::prompts::{COMPRESSION_PROMPT, DECOMPOSITION_PROMPT};
use decor::llm::{compress_documents, decompose_query, ChatClientConfig, CompressMode, LlmClient, SubQuery};
use decor::corpus::Passage;
use decor::Error;
use serde_json::json;

const FAST: RetryPolicy = RetryPolicy {
    attempts: 3,
    initial_backoff_ms: 1,
};

fn chat_reply(text: &str) -> (u16, String) {
    (200, json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}).to_string())
}

fn chat_client(server: &MockServer) -> LlmClient {
    let mut cfg = ChatClientConfig::http(&server.url, "test-model");
    cfg.retry = FAST;
    LlmClient::from_config(&cfg).unwrap()
}

fn embedder(server: &MockServer, batch_size: usize) -> Embedder {
    let mut cfg = EmbedderConfig::http(&server.url, "embed-model");
    cfg.retry = FAST;
    cfg.batch_size = batch_size;
    cfg.max_concurrent = 1;
    Embedder::new(cfg).unwrap()
}

#[test]
fn decomposition_prompt_is_sent_verbatim() {
    let fixture = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/prompts/decomposition.txt")).unwrap();
    let server = MockServer::start(vec![chat_reply(r#"["Who wrote X?", "When was X written?"]"#)]);
    let client = chat_client(&server);
    let subs = decompose_query(&client, "Who wrote X and when?").unwrap();
    assert_eq!(subs.len(), 2);

    let reqs = server.requests();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].path, "/v1/chat/completions");
    let body = reqs[0].json();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][0]["content"].as_str().unwrap(), fixture);
    assert_eq!(body["messages"][0]["content"].as_str().unwrap(), DECOMPOSITION_PROMPT);
    assert_eq!(body["messages"][1], json!({"role": "user", "content": "Who wrote X and when?"}));
}

#[test]
fn compression_message_layout_on_the_wire() {
    let fixture = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/prompts/compression.txt")).unwrap();
    let server = MockServer::start(vec![chat_reply("summary")]);
    let client = chat_client(&server);
    let docs: Vec<Passage> = ["first doc.", "second doc."]
        .iter()
        .enumerate()
        .map(|(i, t)| Passage {
            passage_id: format!("d{i}#0"),
            doc_id: format!("d{i}"),
            text: (*t).into(),
            position: 0,
        })
        .collect();
    let refs: Vec<&Passage> = docs.iter().collect();
    let sq = SubQuery {
        text: "what?".into(),
        ordinal: 1,
    };
    let out = compress_documents(&client, &sq, &refs, CompressMode::Concatenated).unwrap();
    assert_eq!(out.text, "summary");
    let body = server.requests()[0].json();
    assert_eq!(body["messages"][0]["content"].as_str().unwrap(), fixture);
    assert_eq!(body["messages"][0]["content"].as_str().unwrap(), COMPRESSION_PROMPT);
    assert_eq!(
        body["messages"][1]["content"],
        "Question: what?\n\nDocuments:\nfirst doc.\n---\nsecond doc."
    );
}

#[test]
fn retries_server_errors_then_succeeds() {
    let server = MockServer::start(vec![
        (500, "{}".into()),
        (429, "{}".into()),
        chat_reply("ok"),
    ]);
    let client = chat_client(&server);
    assert_eq!(client.chat("s", "u").unwrap(), "ok");
    assert_eq!(server.requests().len(), 3);
}

#[test]
fn gives_up_after_the_attempt_budget() {
    let server = MockServer::start(vec![(503, "{}".into())]);
    let client = chat_client(&server);
    assert!(matches!(client.chat("s", "u"), Err(Error::Transport(_))));
    assert_eq!(server.requests().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let server = MockServer::start(vec![(400, r#"{"error":"bad"}"#.into())]);
    let client = chat_client(&server);
    let err = client.chat("s", "u").unwrap_err();
    assert!(matches!(&err, Error::Transport(m) if m.contains("400")), "{err}");
    assert_eq!(server.requests().len(), 1);
}

#[test]
fn malformed_chat_response_is_a_protocol_error() {
    let server = MockServer::start(vec![(200, r#"{"choices": []}"#.into())]);
    assert!(matches!(chat_client(&server).chat("s", "u"), Err(Error::Protocol(_))));
}

#[test]
fn embeddings_batches_and_reorders_by_index() {
    let server = MockServer::start(vec![
        (200, json!({"data": [{"index": 1, "embedding": [0.0, 1.0]}, {"index": 0, "embedding": [1.0, 0.0]}]}).to_string()),
        (200, json!({"data": [{"index": 0, "embedding": [0.5, 0.5]}]}).to_string()),
    ]);
    let e = embedder(&server, 2);
    let out = e.embed(&["a", "b", "c"]).unwrap();
    assert_eq!(out[0].values(), [1.0, 0.0]);
    assert_eq!(out[1].values(), [0.0, 1.0]);
    assert_eq!(out[2].values(), [0.5, 0.5]);
    let reqs = server.requests();
    assert_eq!(reqs.len(), 2);
    assert_eq!(reqs[0].path, "/v1/embeddings");
    assert_eq!(reqs[0].json(), json!({"model": "embed-model", "input": ["a", "b"]}));
    assert_eq!(reqs[1].json()["input"], json!(["c"]));

    // served from the cache
    e.embed(&["b"]).unwrap();
    assert_eq!(server.requests().len(), 2);
}

#[test]
fn embedding_count_mismatch_is_a_protocol_error() {
    let server = MockServer::start(vec![(200, json!({"data": [{"index": 0, "embedding": [1.0]}]}).to_string())]);
    let err = embedder(&server, 8).embed(&["a", "b"]).unwrap_err();
    assert!(matches!(&err, Error::Protocol(m) if m.contains("requested 2")), "{err}");
}

#[test]
fn bearer_token_comes_from_the_environment() {
    std::env::set_var(decor::http::API_KEY_ENV, "sk-test-123");
    let server = MockServer::start(vec![chat_reply("ok")]);
    let client = chat_client(&server);
    std::env::remove_var(decor::http::API_KEY_ENV);
    client.chat("s", "u").unwrap();
    assert_eq!(server.requests()[0].header("authorization"), Some("Bearer sk-test-123"));
}
