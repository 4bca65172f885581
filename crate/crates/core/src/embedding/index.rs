//! Exact brute-force cosine index over unit-normalized passage embeddings.
//!
//! File layout: a header line `{"format_version":1,"dim":..,"num_rows":..,"model":..}`
//! followed by one `{"passage_id":..,"values":[..]}` line per row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Passage;
use crate::embedding::vector::dot;
use crate::embedding::{Embedder, Embedding};
use crate::error::{Error, Result};
use crate::hit::{rank_top_k, ScoredHit};

pub const VECTOR_FORMAT_VERSION: u32 = 1;
const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    model: String,
    rows: Vec<f64>,
    passage_ids: Vec<String>,
}

impl VectorIndex {
    /// Normalizes every embedding and stores it as a row.
    pub fn from_embeddings(
        model: &str,
        passage_ids: Vec<String>,
        embeddings: &[Embedding],
    ) -> Result<Self> {
        if passage_ids.len() != embeddings.len() {
            return Err(Error::InvalidConfig(format!(
                "{} passage ids for {} embeddings",
                passage_ids.len(),
                embeddings.len()
            )));
        }
        let first = embeddings.first().ok_or(Error::EmptyCorpus)?;
        let dim = first.dim();
        let mut seen = std::collections::HashSet::with_capacity(passage_ids.len());
        if let Some(dup) = passage_ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::InvalidConfig(format!("duplicate passage id {dup}")));
        }
        let mut rows = Vec::with_capacity(dim * embeddings.len());
        for e in embeddings {
            if e.dim() != dim {
                return Err(Error::DimMismatch {
                    left: dim,
                    right: e.dim(),
                });
            }
            rows.extend_from_slice(e.normalized()?.values());
        }
        Ok(VectorIndex {
            dim,
            model: model.to_owned(),
            rows,
            passage_ids,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.passage_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passage_ids.is_empty()
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn passage_ids(&self) -> &[String] {
        &self.passage_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    /// Exact top-`k` by cosine similarity; ties by ascending passage id.
    pub fn search(&self, query: &Embedding, k: usize) -> Result<Vec<ScoredHit>> {
        if query.dim() != self.dim {
            return Err(Error::DimMismatch {
                left: self.dim,
                right: query.dim(),
            });
        }
        let unit = query.normalized()?;
        let scored = self
            .passage_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (dot(unit.values(), self.row(i)), id.as_str()))
            .collect();
        Ok(rank_top_k(scored, k))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::error::ensure_parent(path)?;
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let header = VectorHeader {
            format_version: VECTOR_FORMAT_VERSION,
            dim: self.dim,
            num_rows: self.len(),
            model: self.model.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        w.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
        for (i, id) in self.passage_ids.iter().enumerate() {
            let line = VectorRow {
                passage_id: id.clone(),
                values: self.row(i).to_vec(),
            };
            let json = serde_json::to_string(&line).expect("row serializes");
            writeln!(w, "{json}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let head = lines
            .next()
            .ok_or_else(|| Error::corrupt(path, "missing header"))?
            .map_err(|e| Error::io(path, e))?;
        let header: VectorHeader =
            serde_json::from_str(&head).map_err(|e| Error::corrupt(path, e.to_string()))?;
        if header.format_version != VECTOR_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                expected: VECTOR_FORMAT_VERSION,
                found: u64::from(header.format_version),
            });
        }
        let mut rows = Vec::with_capacity(header.dim * header.num_rows);
        let mut passage_ids = Vec::with_capacity(header.num_rows);
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: VectorRow =
                serde_json::from_str(&line).map_err(|e| Error::corrupt(path, e.to_string()))?;
            if row.values.len() != header.dim {
                return Err(Error::corrupt(path, format!("row {} has wrong dim", row.passage_id)));
            }
            let norm = dot(&row.values, &row.values).sqrt();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::corrupt(path, format!("row {} is not unit norm", row.passage_id)));
            }
            rows.extend(row.values);
            passage_ids.push(row.passage_id);
        }
        if passage_ids.len() != header.num_rows {
            return Err(Error::corrupt(path, "row count does not match header"));
        }
        Ok(VectorIndex {
            dim: header.dim,
            model: header.model,
            rows,
            passage_ids,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct VectorHeader {
    format_version: u32,
    dim: usize,
    num_rows: usize,
    model: String,
}

#[derive(Serialize, Deserialize)]
struct VectorRow {
    passage_id: String,
    values: Vec<f64>,
}

/// Embeds every passage (through the embedder's cache) and indexes it.
pub fn build_vector_index(passages: &[Passage], embedder: &Embedder) -> Result<VectorIndex> {
    if passages.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let texts: Vec<&str> = passages.iter().map(|p| p.text.as_str()).collect();
    let embeddings = embedder.embed_passages(&texts)?;
    VectorIndex::from_embeddings(
        embedder.model_key(),
        passages.iter().map(|p| p.passage_id.clone()).collect(),
        &embeddings,
    )
}

pub fn dense_search(index: &VectorIndex, query: &Embedding, k: usize) -> Result<Vec<ScoredHit>> {
    index.search(query, k)
}
