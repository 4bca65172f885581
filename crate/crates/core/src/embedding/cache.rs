//! Persistent embedding cache keyed by (model, FNV-1a of the text).
//!
//! On disk it is a JSON-lines file of `{model, hash, dim, values}` records.
//! Reads take a shared lock; inserts append under a single writer lock.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::hash::fnv1a64;

#[derive(Serialize, Deserialize)]
struct CacheLine {
    model: String,
    hash: String,
    dim: usize,
    values: Vec<f64>,
}

#[derive(Debug, Default)]
pub struct EmbeddingCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<(String, u64), Embedding>>,
    writer: Mutex<Option<BufWriter<File>>>,
}

impl EmbeddingCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates) the cache file and loads every record in it.
    pub fn open(path: &Path) -> Result<Self> {
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheLine = serde_json::from_str(&line)
                    .map_err(|e| Error::corrupt(path, format!("line {}: {e}", i + 1)))?;
                let hash = u64::from_str_radix(&rec.hash, 16)
                    .map_err(|e| Error::corrupt(path, format!("line {}: {e}", i + 1)))?;
                if rec.values.len() != rec.dim {
                    return Err(Error::corrupt(path, format!("line {}: dim mismatch", i + 1)));
                }
                let emb = Embedding::new(rec.values)
                    .map_err(|e| Error::corrupt(path, format!("line {}: {e}", i + 1)))?;
                entries.insert((rec.model, hash), emb);
            }
        } else if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(EmbeddingCache {
            path: Some(path.to_owned()),
            entries: RwLock::new(entries),
            writer: Mutex::new(Some(BufWriter::new(file))),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, model: &str, text: &str) -> Option<Embedding> {
        let key = (model.to_owned(), fnv1a64(text.as_bytes()));
        self.entries
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(&key)
            .cloned()
    }

    pub fn insert_many(&self, model: &str, items: &[(&str, &Embedding)]) -> Result<()> {
        let mut writer = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let mut entries = self.entries.write().unwrap_or_else(|e| e.into_inner());
        for (text, emb) in items {
            let hash = fnv1a64(text.as_bytes());
            if entries.contains_key(&(model.to_owned(), hash)) {
                continue;
            }
            if let (Some(w), Some(path)) = (writer.as_mut(), &self.path) {
                let line = CacheLine {
                    model: model.to_owned(),
                    hash: format!("{hash:016x}"),
                    dim: emb.dim(),
                    values: emb.values().to_vec(),
                };
                let json = serde_json::to_string(&line).expect("cache line serializes");
                writeln!(w, "{json}").map_err(|e| Error::io(path, e))?;
            }
            entries.insert((model.to_owned(), hash), (*emb).clone());
        }
        if let (Some(w), Some(path)) = (writer.as_mut(), &self.path) {
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn persisted_values_are_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let emb = Embedding::new(vec![0.1, 1.0 / 3.0, -2.5e-300, std::f64::consts::PI]).unwrap();
        {
            let cache = EmbeddingCache::open(&path).unwrap();
            cache.insert_many("m", &[("hello", &emb)]).unwrap();
        }
        let cache = EmbeddingCache::open(&path).unwrap();
        let back = cache.get("m", "hello").unwrap();
        let bits = |e: &Embedding| e.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&emb));
        assert!(cache.get("other-model", "hello").is_none());
        assert!(cache.get("m", "hello!").is_none());
    }

    #[test]
    fn corrupt_line_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        fs::write(&path, "{not json\n").unwrap();
        assert!(matches!(EmbeddingCache::open(&path), Err(Error::Corrupt { .. })));
    }
}
