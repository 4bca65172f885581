mod common;

use decor::corpus::{build_qrels, FactMatcher, QueryRecord};
use decor::embedding::{Embedder, EmbedderConfig};
use decor::eval::{hits_at_k, HitsVariant, Run};
use decor::llm::prompts::DECOMPOSITION_PROMPT;
use decor::llm::{ChatModel, HeuristicChat, LlmClient, ScriptedChat, Transcript};
use decor::pipeline::{expand_decor, run_batch, run_query, Ablation, Engine, Method, PipelineConfig};
use decor::sparse::Bm25Params;

// Tie-tolerant ranks printed by fixtures/planted/oracle.py: 1 + the number of
// passages scoring more than 1e-12 above the gold passage.
const GOLD: [[&str; 2]; 5] = [
    ["d008#0", "d042#0"],
    ["d038#0", "d007#0"],
    ["d041#0", "d037#0"],
    ["d004#0", "d005#0"],
    ["d035#0", "d025#0"],
];
const PLAIN_RANKS: [[usize; 2]; 5] = [[1, 49], [1, 47], [1, 38], [1, 48], [1, 50]];
const DECOR_RANKS: [[usize; 2]; 5] = [[1, 2], [1, 2], [1, 2], [1, 2], [1, 3]];

fn engine_with(model: impl ChatModel + 'static) -> (Engine, Vec<QueryRecord>) {
    let (passages, queries) = common::planted();
    let embedder = Embedder::new(EmbedderConfig::mock(512)).unwrap();
    let engine = Engine::build(passages, Bm25Params::default(), embedder, LlmClient::new(model, 4)).unwrap();
    (engine, queries)
}

fn scripted() -> (Engine, Vec<QueryRecord>) {
    let transcript = Transcript::load(&common::planted_dir().join("transcript.jsonl")).unwrap();
    engine_with(ScriptedChat::new(transcript))
}

fn full_ranks(engine: &Engine, cfg: &PipelineConfig, q: &QueryRecord, gold: &[&str; 2]) -> [usize; 2] {
    let cfg = PipelineConfig { k: engine.passages().len(), ..cfg.clone() };
    let hits = run_query(engine, &cfg, q).unwrap();
    gold.map(|g| {
        let score = hits.iter().find(|h| h.passage_id == g).unwrap().score;
        1 + hits.iter().filter(|h| h.score > score + 1e-12).count()
    })
}

#[test]
fn gold_ranks_match_the_oracle() {
    let (engine, queries) = scripted();
    let plain = PipelineConfig::method(Method::Plain);
    let decor = PipelineConfig::default();
    for (i, q) in queries.iter().enumerate() {
        assert_eq!(full_ranks(&engine, &plain, q, &GOLD[i]), PLAIN_RANKS[i], "plain {}", q.query_id);
        assert_eq!(full_ranks(&engine, &decor, q, &GOLD[i]), DECOR_RANKS[i], "decor {}", q.query_id);
    }
}

#[test]
fn qrels_agree_with_the_oracle_gold() {
    let (engine, queries) = scripted();
    let (qrels, unmatched) = build_qrels(&queries, engine.passages(), FactMatcher::NormalizedSubstring).unwrap();
    assert!(unmatched.unmatched.is_empty());
    for (q, gold) in queries.iter().zip(GOLD) {
        let got: Vec<&str> = qrels.gold(&q.query_id).unwrap().iter().map(String::as_str).collect();
        let mut want = gold.to_vec();
        want.sort_unstable();
        assert_eq!(got, want);
    }
}

#[test]
fn decor_beats_plain_on_micro_hits() {
    let (engine, queries) = scripted();
    let (qrels, _) = build_qrels(&queries, engine.passages(), FactMatcher::NormalizedSubstring).unwrap();
    let score = |cfg: PipelineConfig| {
        let run = run_batch(&engine, &cfg, &queries).unwrap();
        assert!(run.failures.is_empty(), "{:?}", run.failures);
        hits_at_k(&Run::from_result(&run), &qrels, 10, HitsVariant::Micro).unwrap()
    };
    assert_eq!(score(PipelineConfig::method(Method::Plain)), 0.5);
    assert_eq!(score(PipelineConfig::default()), 1.0);
}

#[test]
fn ablation_call_counts() {
    let (engine, queries) = scripted();
    for q in &queries {
        let calls = engine.llm().calls();
        let bm25 = engine.bm25_calls();
        let exp = expand_decor(&engine, &PipelineConfig::default(), q).unwrap();
        let m = exp.sub_queries.len();
        assert_eq!(m, 2);
        assert_eq!(engine.llm().calls() - calls, 1 + m, "one decomposition plus one call per sub-query");
        assert_eq!(engine.bm25_calls() - bm25, m);

        let calls = engine.llm().calls();
        let cfg = PipelineConfig::default().with_ablation(Ablation::NoDecomposition);
        let exp = expand_decor(&engine, &cfg, q).unwrap();
        assert_eq!(exp.sub_queries.len(), 1);
        assert_eq!(exp.sub_queries[0].text, q.text);
        assert_eq!(engine.llm().calls() - calls, 1);

        let calls = engine.llm().calls();
        let cfg = PipelineConfig::default().with_ablation(Ablation::DocumentWiseCompression);
        let exp = expand_decor(&engine, &cfg, q).unwrap();
        let candidates: usize = exp.candidates.iter().map(Vec::len).sum();
        assert_eq!(engine.llm().calls() - calls, 1 + candidates);

        let calls = engine.llm().calls();
        let bm25 = engine.bm25_calls();
        let cfg = PipelineConfig::default().with_ablation(Ablation::NoExpansion);
        run_query(&engine, &cfg, q).unwrap();
        assert_eq!(engine.llm().calls(), calls);
        assert_eq!(engine.bm25_calls(), bm25);
    }
}

#[test]
fn no_expansion_run_equals_plain() {
    let (engine, queries) = scripted();
    let tag = |m| PipelineConfig { run_tag: Some("same".into()), ..m };
    let plain = run_batch(&engine, &tag(PipelineConfig::method(Method::Plain)), &queries).unwrap();
    let ablated = run_batch(&engine, &tag(PipelineConfig::default().with_ablation(Ablation::NoExpansion)), &queries).unwrap();
    assert_eq!(plain.to_trec(), ablated.to_trec());
}

#[test]
fn every_variant_runs_from_the_transcript() {
    let (engine, queries) = scripted();
    let mut variants: Vec<PipelineConfig> = Ablation::ALL
        .into_iter()
        .map(|a| PipelineConfig::default().with_ablation(a))
        .collect();
    variants.push(PipelineConfig::method(Method::Hyde));
    variants.push(PipelineConfig::method(Method::Query2doc));
    variants.push(
        PipelineConfig::default()
            .with_ablation(Ablation::NoDecomposition)
            .with_ablation(Ablation::DocumentWiseCompression),
    );
    for cfg in variants {
        let run = run_batch(&engine, &cfg, &queries).unwrap();
        assert!(run.failures.is_empty(), "{}: {:?}", cfg.run_tag(), run.failures);
        assert_eq!(run.results.len(), queries.len());
    }
}

#[test]
fn repeated_batches_are_byte_identical() {
    let (engine, queries) = scripted();
    let cfg = PipelineConfig { max_concurrent_queries: 3, ..PipelineConfig::default() };
    let a = run_batch(&engine, &cfg, &queries).unwrap();
    let (engine, _) = scripted();
    let b = run_batch(&engine, &cfg, &queries).unwrap();
    assert_eq!(a.to_trec(), b.to_trec());
    assert_eq!(a.trace_jsonl(), b.trace_jsonl());
}

#[test]
fn transcript_miss_fails_only_that_query() {
    let mut transcript = Transcript::load(&common::planted_dir().join("transcript.jsonl")).unwrap();
    let (_, queries) = common::planted();
    let mut queries = queries[..3].to_vec();
    queries[1].text.push_str(" (unscripted)");
    transcript.insert(DECOMPOSITION_PROMPT, "unused", "[]");
    let (engine, _) = engine_with(ScriptedChat::new(transcript));
    let run = run_batch(&engine, &PipelineConfig::default(), &queries).unwrap();
    assert_eq!(run.results.len(), 2);
    assert_eq!(run.failures.len(), 1);
    assert_eq!(run.failures[0].query_id, queries[1].query_id);
    assert!(run.failures[0].error.contains("no transcript entry"));
}

#[test]
fn skipped_sub_queries_shrink_the_divisor() {
    struct Decomposer;
    impl ChatModel for Decomposer {
        fn complete(&self, system: &str, user: &str) -> decor::Result<String> {
            if system == DECOMPOSITION_PROMPT {
                Ok(format!(r#"["{user}", "qqqq zzzz", "xxyy"]"#))
            } else {
                HeuristicChat.complete(system, user)
            }
        }
    }
    let (engine, queries) = engine_with(Decomposer);
    let q = &queries[0];
    let exp = expand_decor(&engine, &PipelineConfig::default(), q).unwrap();
    assert_eq!(exp.sub_queries.len(), 3);
    assert_eq!(exp.compressed.iter().filter(|c| c.is_none()).count(), 2);
    let pairs = exp.pair_texts();
    assert_eq!(pairs.len(), 1);
    let mut texts = vec![q.text.clone()];
    texts.extend(pairs);
    let parts = engine.embedder().embed_queries(&texts).unwrap();
    // e_exp * (m - s + 1) equals the component sum
    for (j, v) in exp.expansion_embedding.values().iter().enumerate() {
        let sum: f64 = parts.iter().map(|p| p.values()[j]).sum();
        assert!((v * 2.0 - sum).abs() < 1e-9);
    }
}
