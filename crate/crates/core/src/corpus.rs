//! Document collection, query set and gold relevance.
//!
//! Documents come from a MultiHop-RAG style JSON array (or a looser generic
//! JSON array), are cut into word-window [`Passage`]s, and the evidence facts
//! attached to each query are aligned to passages by normalized substring
//! matching to produce [`Qrels`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const CORPUS_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_CHUNK_SIZE: usize = 256;
pub const DEFAULT_OVERLAP: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub body: String,
    pub source: String,
    pub published_at: String,
    pub category: String,
    /// Fields the loader did not recognize, kept verbatim (non-strings as JSON text).
    pub extra: BTreeMap<String, String>,
}

/// A retrieval unit: one word window of a document body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub passage_id: String,
    pub doc_id: String,
    pub text: String,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceFact {
    pub fact: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_title: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_type: Option<String>,
    #[serde(default)]
    pub gold_evidence: Vec<EvidenceFact>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    #[default]
    MultihopRag,
    GenericJson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactMatcher {
    #[default]
    NormalizedSubstring,
    Exact,
}

/// Gold-relevant passages per query. Queries whose evidence matched nothing
/// are present with an empty set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    map: BTreeMap<String, BTreeSet<String>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_query(&mut self, query_id: &str) {
        self.map.entry(query_id.to_owned()).or_default();
    }

    pub fn insert(&mut self, query_id: &str, passage_id: &str) {
        self.map
            .entry(query_id.to_owned())
            .or_default()
            .insert(passage_id.to_owned());
    }

    pub fn gold(&self, query_id: &str) -> Option<&BTreeSet<String>> {
        self.map.get(query_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn num_gold(&self) -> usize {
        self.map.values().map(BTreeSet::len).sum()
    }

    /// `query_id passage_id` lines; a query without gold passages is written
    /// as a line holding only its id so evaluation still knows the query.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (qid, gold) in &self.map {
            if gold.is_empty() {
                out.push_str(qid);
                out.push('\n');
            }
            for pid in gold {
                out.push_str(qid);
                out.push(' ');
                out.push_str(pid);
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut qrels = Qrels::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            match cols.as_slice() {
                [qid] => qrels.insert_query(qid),
                [qid, pid] => qrels.insert(qid, pid),
                _ => {
                    return Err(Error::MalformedInput(format!(
                        "qrels line {}: expected `query_id passage_id`, got {} columns",
                        i + 1,
                        cols.len()
                    )))
                }
            }
        }
        Ok(qrels)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnmatchedFact {
    pub query_id: String,
    pub fact_index: usize,
    pub fact: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UnmatchedReport {
    pub total_facts: usize,
    pub unmatched: Vec<UnmatchedFact>,
}

fn read_json_array(path: &Path) -> Result<Vec<Value>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::MalformedInput(format!("{}: {e}", path.display())))?;
    match value {
        Value::Array(items) => Ok(items),
        _ => Err(Error::MalformedInput(format!(
            "{}: expected a JSON array of objects",
            path.display()
        ))),
    }
}

fn ordinal_id(prefix: char, ordinal: usize, total: usize) -> String {
    let width = total.saturating_sub(1).to_string().len().max(3);
    format!("{prefix}{ordinal:0width$}")
}

fn value_to_string(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn take_string(obj: &mut Map<String, Value>, keys: &[&str]) -> Option<String> {
    keys.iter()
        .find_map(|k| obj.remove(*k))
        .filter(|v| !v.is_null())
        .map(|v| value_to_string(&v))
}

pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn parse_corpus(items: Vec<Value>, format: InputFormat) -> Result<Vec<Document>> {
    let total = items.len();
    let (id_keys, body_keys): (&[&str], &[&str]) = match format {
        InputFormat::MultihopRag => (&["doc_id", "id"], &["body"]),
        InputFormat::GenericJson => (&["doc_id", "id"], &["body", "text", "content"]),
    };
    let mut seen = HashSet::with_capacity(total);
    let mut docs = Vec::with_capacity(total);
    for (i, item) in items.into_iter().enumerate() {
        let Value::Object(mut obj) = item else {
            return Err(Error::MalformedInput(format!("element {i} is not an object")));
        };
        let title = take_string(&mut obj, &["title"]);
        let body = take_string(&mut obj, body_keys);
        let body = match (body, &title, format) {
            (Some(body), Some(_), _) | (Some(body), None, InputFormat::GenericJson) => body,
            (None, _, _) => {
                return Err(Error::MalformedInput(format!("element {i} has no body")))
            }
            (Some(_), None, InputFormat::MultihopRag) => {
                return Err(Error::MalformedInput(format!("element {i} has no title")))
            }
        };
        if body.trim().is_empty() {
            return Err(Error::MalformedInput(format!("element {i} has an empty body")));
        }
        let doc_id = take_string(&mut obj, id_keys).unwrap_or_else(|| ordinal_id('d', i, total));
        if !seen.insert(doc_id.clone()) {
            return Err(Error::MalformedInput(format!(
                "element {i} repeats doc_id {doc_id}"
            )));
        }
        docs.push(Document {
            doc_id,
            title: title.unwrap_or_default(),
            body,
            source: take_string(&mut obj, &["source"]).unwrap_or_default(),
            published_at: take_string(&mut obj, &["published_at"]).unwrap_or_default(),
            category: take_string(&mut obj, &["category"]).unwrap_or_default(),
            extra: obj.iter().map(|(k, v)| (k.clone(), value_to_string(v))).collect(),
        });
    }
    Ok(docs)
}

pub fn ingest_corpus(path: &Path, format: InputFormat) -> Result<Vec<Document>> {
    parse_corpus(read_json_array(path)?, format)
}

/// Serializes documents back into the MultiHop-RAG object layout, with the
/// assigned `doc_id` included so a re-ingest keeps identifiers.
pub fn documents_to_json(docs: &[Document]) -> Value {
    Value::Array(
        docs.iter()
            .map(|d| {
                let mut obj = Map::new();
                for (k, v) in &d.extra {
                    obj.insert(k.clone(), Value::String(v.clone()));
                }
                obj.insert("doc_id".into(), d.doc_id.clone().into());
                obj.insert("title".into(), d.title.clone().into());
                obj.insert("body".into(), d.body.clone().into());
                obj.insert("source".into(), d.source.clone().into());
                obj.insert("published_at".into(), d.published_at.clone().into());
                obj.insert("category".into(), d.category.clone().into());
                Value::Object(obj)
            })
            .collect(),
    )
}

pub fn parse_queries(items: Vec<Value>) -> Result<Vec<QueryRecord>> {
    let total = items.len();
    let mut seen = HashSet::with_capacity(total);
    let mut out = Vec::with_capacity(total);
    for (i, item) in items.into_iter().enumerate() {
        let Value::Object(mut obj) = item else {
            return Err(Error::MalformedInput(format!("query {i} is not an object")));
        };
        let text = take_string(&mut obj, &["query", "text", "question"])
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| Error::MalformedInput(format!("query {i} has no query text")))?;
        let query_id =
            take_string(&mut obj, &["query_id", "id"]).unwrap_or_else(|| ordinal_id('q', i, total));
        if !seen.insert(query_id.clone()) {
            return Err(Error::MalformedInput(format!(
                "query {i} repeats query_id {query_id}"
            )));
        }
        let evidence = match obj.remove("evidence_list") {
            Some(Value::Array(list)) => list,
            Some(Value::Null) | None => Vec::new(),
            Some(_) => {
                return Err(Error::MalformedInput(format!(
                    "query {i}: evidence_list is not an array"
                )))
            }
        };
        let gold_evidence = evidence
            .into_iter()
            .filter_map(|e| {
                let Value::Object(mut e) = e else { return None };
                let fact = take_string(&mut e, &["fact"]).filter(|f| !f.trim().is_empty())?;
                let source_title = take_string(&mut e, &["title", "source_title"]);
                Some(EvidenceFact { fact, source_title })
            })
            .collect();
        out.push(QueryRecord {
            query_id,
            text,
            question_type: take_string(&mut obj, &["question_type"]),
            gold_evidence,
        });
    }
    Ok(out)
}

/// Loads a query file. `question_type` keeps only queries of that type.
pub fn ingest_queries(path: &Path, question_type: Option<&str>) -> Result<Vec<QueryRecord>> {
    let mut queries = parse_queries(read_json_array(path)?)?;
    if let Some(kind) = question_type {
        queries.retain(|q| q.question_type.as_deref() == Some(kind));
    }
    Ok(queries)
}

/// Cuts a document body into whitespace-token windows of `chunk_size` words
/// advancing by `chunk_size - overlap`. `chunk_size == 0` keeps the whole
/// document as a single passage.
pub fn chunk_document(doc: &Document, chunk_size: usize, overlap: usize) -> Result<Vec<Passage>> {
    let words: Vec<&str> = doc.body.split_whitespace().collect();
    let passage = |position: usize, text: String| Passage {
        passage_id: format!("{}#{}", doc.doc_id, position),
        doc_id: doc.doc_id.clone(),
        text,
        position,
    };
    if chunk_size == 0 {
        return Ok(vec![passage(0, words.join(" "))]);
    }
    if overlap >= chunk_size {
        return Err(Error::InvalidConfig(format!(
            "overlap ({overlap}) must be smaller than chunk_size ({chunk_size})"
        )));
    }
    let stride = chunk_size - overlap;
    let mut out = Vec::new();
    let mut start = 0;
    while start < words.len() {
        let end = (start + chunk_size).min(words.len());
        out.push(passage(out.len(), words[start..end].join(" ")));
        if end == words.len() {
            break;
        }
        start += stride;
    }
    Ok(out)
}

pub fn chunk_corpus(docs: &[Document], chunk_size: usize, overlap: usize) -> Result<Vec<Passage>> {
    let chunked: Vec<Vec<Passage>> = docs
        .par_iter()
        .map(|d| chunk_document(d, chunk_size, overlap))
        .collect::<Result<_>>()?;
    Ok(chunked.into_iter().flatten().collect())
}

/// Lowercase, punctuation removed, whitespace collapsed.
pub fn normalize_for_match(text: &str) -> String {
    let stripped: String = text
        .chars()
        .filter(|c| !c.is_ascii_punctuation() && !is_unicode_punct(*c))
        .flat_map(char::to_lowercase)
        .collect();
    normalize_whitespace(&stripped)
}

fn is_unicode_punct(c: char) -> bool {
    matches!(
        c,
        '\u{2010}'..='\u{2027}' | '\u{2030}'..='\u{205e}' | '\u{00a1}' | '\u{00ab}' | '\u{00bb}' | '\u{00bf}'
    )
}

pub fn build_qrels(
    queries: &[QueryRecord],
    passages: &[Passage],
    matcher: FactMatcher,
) -> Result<(Qrels, UnmatchedReport)> {
    if passages.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let prepare = |text: &str| match matcher {
        FactMatcher::NormalizedSubstring => normalize_for_match(text),
        FactMatcher::Exact => text.to_owned(),
    };
    let haystacks: Vec<String> = passages.par_iter().map(|p| prepare(&p.text)).collect();

    let per_query: Vec<(Vec<&str>, Vec<UnmatchedFact>)> = queries
        .par_iter()
        .map(|q| {
            let mut gold = Vec::new();
            let mut unmatched = Vec::new();
            for (fact_index, fact) in q.gold_evidence.iter().enumerate() {
                let needle = prepare(&fact.fact);
                let before = gold.len();
                if !needle.is_empty() {
                    gold.extend(
                        passages
                            .iter()
                            .zip(&haystacks)
                            .filter(|(_, hay)| hay.contains(needle.as_str()))
                            .map(|(p, _)| p.passage_id.as_str()),
                    );
                }
                if gold.len() == before {
                    unmatched.push(UnmatchedFact {
                        query_id: q.query_id.clone(),
                        fact_index,
                        fact: fact.fact.clone(),
                    });
                }
            }
            (gold, unmatched)
        })
        .collect();

    let mut qrels = Qrels::new();
    let mut report = UnmatchedReport::default();
    for (q, (gold, unmatched)) in queries.iter().zip(per_query) {
        qrels.insert_query(&q.query_id);
        for pid in gold {
            qrels.insert(&q.query_id, pid);
        }
        report.total_facts += q.gold_evidence.len();
        report.unmatched.extend(unmatched);
    }
    Ok((qrels, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub format_version: u32,
    pub chunk_size: usize,
    pub overlap: usize,
    pub num_docs: usize,
    pub num_passages: usize,
}

pub const CORPUS_HEADER_FILE: &str = "corpus.json";
pub const PASSAGES_FILE: &str = "passages.jsonl";

/// Writes `corpus.json` and `passages.jsonl` into `dir`.
pub fn save_corpus_store(
    dir: &Path,
    passages: &[Passage],
    chunk_size: usize,
    overlap: usize,
    num_docs: usize,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let header = CorpusHeader {
        format_version: CORPUS_FORMAT_VERSION,
        chunk_size,
        overlap,
        num_docs,
        num_passages: passages.len(),
    };
    let header_path = dir.join(CORPUS_HEADER_FILE);
    let header_json = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(&header_path, header_json + "\n").map_err(|e| Error::io(&header_path, e))?;

    let path = dir.join(PASSAGES_FILE);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    for p in passages {
        let line = serde_json::to_string(p).expect("passage serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

pub fn load_corpus_store(dir: &Path) -> Result<(CorpusHeader, Vec<Passage>)> {
    let header_path = dir.join(CORPUS_HEADER_FILE);
    let text = fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
    let header: CorpusHeader = serde_json::from_str(&text)
        .map_err(|e| Error::corrupt(&header_path, e.to_string()))?;
    if header.format_version != CORPUS_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            expected: CORPUS_FORMAT_VERSION,
            found: u64::from(header.format_version),
        });
    }
    let path = dir.join(PASSAGES_FILE);
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut passages = Vec::with_capacity(header.num_passages);
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: Passage = serde_json::from_str(&line)
            .map_err(|e| Error::corrupt(&path, format!("line {}: {e}", i + 1)))?;
        passages.push(p);
    }
    if passages.len() != header.num_passages {
        return Err(Error::corrupt(
            &path,
            format!(
                "header lists {} passages, file holds {}",
                header.num_passages,
                passages.len()
            ),
        ));
    }
    Ok((header, passages))
}
