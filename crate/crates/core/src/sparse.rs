//! BM25 inverted index for per-sub-query candidate retrieval.
//!
//! Scoring is the classic Okapi form with the non-negative idf variant:
//!
//! ```text
//! idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))
//! score(q, p) = Σ_t idf(t) · tf·(k1 + 1) / (tf + k1·(1 - b + b·len/avg_len))
//! ```
//!
//! The sum runs over the distinct terms of the query. Passages that match no
//! query term are never returned.
//!
//! # File layout
//!
//! ```text
//! {"format_version":1,"k1":..,"b":..,"N":..,"avg_len":..,"num_terms":..,"checksum":"<16 hex>"}
//! {"passage_id":"d000#0","len":212}          <- N lines, ordinal order
//! {"term":"cat","postings":[[0,2],[5,1]]}    <- num_terms lines, term-id order
//! ```
//!
//! `checksum` is FNV-1a 64 over every byte after the header line.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Passage;
use crate::error::{Error, Result};
use crate::hash::Fnv1a64;
use crate::hit::{rank_top_k, ScoredHit};

pub const INDEX_FORMAT_VERSION: u32 = 1;

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let params = Bm25Params { k1, b };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 > 0.0) {
            return Err(Error::InvalidConfig(format!("bm25.k1 must be > 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidConfig(format!("bm25.b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub ordinal: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    params: Bm25Params,
    vocabulary: HashMap<String, u32>,
    terms: Vec<String>,
    postings: Vec<Vec<Posting>>,
    doc_len: Vec<u32>,
    passage_ids: Vec<String>,
    avg_len: f64,
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`; never negative.
pub fn idf(num_docs: usize, df: usize) -> f64 {
    let n = num_docs as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

pub fn build_index(passages: &[Passage], params: Bm25Params) -> Result<Bm25Index> {
    if passages.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    params.validate()?;
    let mut vocabulary: HashMap<String, u32> = HashMap::new();
    let mut terms: Vec<String> = Vec::new();
    let mut postings: Vec<Vec<Posting>> = Vec::new();
    let mut doc_len = Vec::with_capacity(passages.len());
    let mut counts: HashMap<u32, u32> = HashMap::new();

    for (ordinal, passage) in passages.iter().enumerate() {
        let tokens = tokenize(&passage.text);
        doc_len.push(tokens.len() as u32);
        counts.clear();
        for token in tokens {
            let id = match vocabulary.get(&token) {
                Some(&id) => id,
                None => {
                    let id = terms.len() as u32;
                    vocabulary.insert(token.clone(), id);
                    terms.push(token);
                    postings.push(Vec::new());
                    id
                }
            };
            *counts.entry(id).or_insert(0) += 1;
        }
        for (&id, &tf) in &counts {
            postings[id as usize].push(Posting {
                ordinal: ordinal as u32,
                tf,
            });
        }
    }

    let total: u64 = doc_len.iter().map(|&l| u64::from(l)).sum();
    let avg_len = total as f64 / passages.len() as f64;
    Ok(Bm25Index {
        params,
        vocabulary,
        terms,
        postings,
        doc_len,
        passage_ids: passages.iter().map(|p| p.passage_id.clone()).collect(),
        avg_len,
    })
}

impl Bm25Index {
    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn num_docs(&self) -> usize {
        self.doc_len.len()
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn doc_len(&self, ordinal: usize) -> u32 {
        self.doc_len[ordinal]
    }

    pub fn passage_id(&self, ordinal: usize) -> &str {
        &self.passage_ids[ordinal]
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings(term).map_or(0, <[Posting]>::len)
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.vocabulary
            .get(term)
            .map(|&id| self.postings[id as usize].as_slice())
    }

    /// Terms in id order with their postings.
    pub fn iter_postings(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.terms
            .iter()
            .zip(&self.postings)
            .map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    /// Top-`n` passages for `query`, scores descending, ties by passage id.
    pub fn search(&self, query: &str, n: usize) -> Vec<ScoredHit> {
        let mut seen = Vec::new();
        for term in tokenize(query) {
            if !seen.contains(&term) {
                seen.push(term);
            }
        }
        let Bm25Params { k1, b } = self.params;
        let num_docs = self.num_docs();
        let mut parts: Vec<Vec<f64>> = vec![Vec::new(); num_docs];
        let mut touched: Vec<u32> = Vec::new();
        for term in &seen {
            let Some(list) = self.postings(term) else { continue };
            let term_idf = idf(num_docs, list.len());
            for posting in list {
                let i = posting.ordinal as usize;
                let tf = f64::from(posting.tf);
                let len = f64::from(self.doc_len[i]);
                let norm = k1 * (1.0 - b + b * len / self.avg_len);
                if parts[i].is_empty() {
                    touched.push(posting.ordinal);
                }
                parts[i].push(term_idf * (tf * (k1 + 1.0)) / (tf + norm));
            }
        }
        // Summing in ascending order makes the score independent of query
        // term order, so equal contribution sets give bit-equal scores.
        let scored = touched
            .into_iter()
            .map(|o| {
                let p = &mut parts[o as usize];
                p.sort_by(f64::total_cmp);
                (p.iter().sum::<f64>(), self.passage_ids[o as usize].as_str())
            })
            .filter(|(s, _)| *s > 0.0)
            .collect();
        rank_top_k(scored, n)
    }
}

pub fn bm25_search(index: &Bm25Index, query: &str, n: usize) -> Vec<ScoredHit> {
    index.search(query, n)
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexHeader {
    format_version: u32,
    k1: f64,
    b: f64,
    #[serde(rename = "N")]
    num_docs: usize,
    avg_len: f64,
    num_terms: usize,
    checksum: String,
}

#[derive(Serialize, Deserialize)]
struct DocLine {
    passage_id: String,
    len: u32,
}

#[derive(Serialize, Deserialize)]
struct TermLine {
    term: String,
    postings: Vec<(u32, u32)>,
}

pub fn save_index(index: &Bm25Index, path: &Path) -> Result<()> {
    crate::error::ensure_parent(path)?;
    let mut body = String::new();
    for (pid, &len) in index.passage_ids.iter().zip(&index.doc_len) {
        let line = DocLine {
            passage_id: pid.clone(),
            len,
        };
        body.push_str(&serde_json::to_string(&line).expect("doc line serializes"));
        body.push('\n');
    }
    for (term, list) in index.iter_postings() {
        let line = TermLine {
            term: term.to_owned(),
            postings: list.iter().map(|p| (p.ordinal, p.tf)).collect(),
        };
        body.push_str(&serde_json::to_string(&line).expect("term line serializes"));
        body.push('\n');
    }
    let mut checksum = Fnv1a64::default();
    checksum.update(body.as_bytes());
    let header = IndexHeader {
        format_version: INDEX_FORMAT_VERSION,
        k1: index.params.k1,
        b: index.params.b,
        num_docs: index.num_docs(),
        avg_len: index.avg_len,
        num_terms: index.num_terms(),
        checksum: format!("{:016x}", checksum.finish()),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    out.push_str(&body);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: &Path) -> Result<Bm25Index> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::corrupt(path, "missing header line"))?;
    let (head, body) = (&bytes[..split], &bytes[split + 1..]);

    let raw: serde_json::Value =
        serde_json::from_slice(head).map_err(|e| Error::corrupt(path, format!("header: {e}")))?;
    let version = raw
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::corrupt(path, "header lacks format_version"))?;
    if version != u64::from(INDEX_FORMAT_VERSION) {
        return Err(Error::VersionMismatch {
            expected: INDEX_FORMAT_VERSION,
            found: version,
        });
    }
    let header: IndexHeader =
        serde_json::from_value(raw).map_err(|e| Error::corrupt(path, format!("header: {e}")))?;

    let mut checksum = Fnv1a64::default();
    checksum.update(body);
    if format!("{:016x}", checksum.finish()) != header.checksum {
        return Err(Error::corrupt(path, "checksum mismatch"));
    }

    let body = std::str::from_utf8(body).map_err(|e| Error::corrupt(path, e.to_string()))?;
    let mut lines = body.lines();
    let mut passage_ids = Vec::with_capacity(header.num_docs);
    let mut doc_len = Vec::with_capacity(header.num_docs);
    for _ in 0..header.num_docs {
        let line = lines
            .next()
            .ok_or_else(|| Error::corrupt(path, "fewer passage lines than N"))?;
        let d: DocLine =
            serde_json::from_str(line).map_err(|e| Error::corrupt(path, e.to_string()))?;
        passage_ids.push(d.passage_id);
        doc_len.push(d.len);
    }
    let mut vocabulary = HashMap::with_capacity(header.num_terms);
    let mut terms = Vec::with_capacity(header.num_terms);
    let mut postings = Vec::with_capacity(header.num_terms);
    for line in lines {
        let t: TermLine =
            serde_json::from_str(line).map_err(|e| Error::corrupt(path, e.to_string()))?;
        let list: Vec<Posting> = t
            .postings
            .into_iter()
            .map(|(ordinal, tf)| Posting { ordinal, tf })
            .collect();
        let ordered = list.windows(2).all(|w| w[0].ordinal < w[1].ordinal);
        if !ordered || list.iter().any(|p| p.ordinal as usize >= header.num_docs) {
            return Err(Error::corrupt(path, format!("bad postings for term {:?}", t.term)));
        }
        vocabulary.insert(t.term.clone(), terms.len() as u32);
        terms.push(t.term);
        postings.push(list);
    }
    if terms.len() != header.num_terms {
        return Err(Error::corrupt(path, "term count does not match header"));
    }
    let params = Bm25Params::new(header.k1, header.b)?;
    Ok(Bm25Index {
        params,
        vocabulary,
        terms,
        postings,
        doc_len,
        passage_ids,
        avg_len: header.avg_len,
    })
}
