//! Recorded chat responses keyed by request hash, for deterministic replay.
//!
//! A transcript is a JSON-lines file of `{"request_hash": "<16 hex>", "response": "..."}`.
//! In record mode, requests missing from the transcript are forwarded to a
//! live model and the answer is appended to the file.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::request_hash;
use crate::llm::ChatModel;

#[derive(Debug, Serialize, Deserialize)]
struct TranscriptLine {
    request_hash: String,
    response: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    entries: HashMap<u64, String>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TranscriptLine = serde_json::from_str(&line)
                .map_err(|e| Error::corrupt(path, format!("line {}: {e}", i + 1)))?;
            let hash = u64::from_str_radix(&rec.request_hash, 16)
                .map_err(|e| Error::corrupt(path, format!("line {}: {e}", i + 1)))?;
            entries.insert(hash, rec.response);
        }
        Ok(Transcript { entries })
    }

    pub fn insert(&mut self, system: &str, user: &str, response: impl Into<String>) {
        self.entries.insert(request_hash(system, user), response.into());
    }

    pub fn get(&self, system: &str, user: &str) -> Option<&str> {
        self.entries.get(&request_hash(system, user)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes every entry, sorted by hash so the file is reproducible.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut keys: Vec<_> = self.entries.keys().copied().collect();
        keys.sort_unstable();
        let mut out = String::new();
        for k in keys {
            out.push_str(&line_for(k, &self.entries[&k]));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn line_for(hash: u64, response: &str) -> String {
    let rec = TranscriptLine {
        request_hash: format!("{hash:016x}"),
        response: response.to_owned(),
    };
    serde_json::to_string(&rec).expect("transcript line serializes") + "\n"
}

/// Replays a transcript; optionally records misses from a live model.
pub struct ScriptedChat {
    entries: RwLock<HashMap<u64, String>>,
    recorder: Option<Recorder>,
}

struct Recorder {
    live: Box<dyn ChatModel>,
    path: PathBuf,
    file: Mutex<File>,
}

impl ScriptedChat {
    pub fn new(transcript: Transcript) -> Self {
        ScriptedChat {
            entries: RwLock::new(transcript.entries),
            recorder: None,
        }
    }

    /// Record mode: the transcript file may not exist yet.
    pub fn recording(path: &Path, live: Box<dyn ChatModel>) -> Result<Self> {
        let transcript = if path.exists() {
            Transcript::load(path)?
        } else {
            Transcript::new()
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(ScriptedChat {
            entries: RwLock::new(transcript.entries),
            recorder: Some(Recorder {
                live,
                path: path.to_owned(),
                file: Mutex::new(file),
            }),
        })
    }
}

impl ChatModel for ScriptedChat {
    fn complete(&self, system: &str, user: &str) -> Result<String> {
        let hash = request_hash(system, user);
        if let Some(hit) = self.entries.read().unwrap_or_else(|e| e.into_inner()).get(&hash) {
            return Ok(hit.clone());
        }
        let Some(rec) = &self.recorder else {
            return Err(Error::TranscriptMiss(hash));
        };
        let response = rec.live.complete(system, user)?;
        let mut file = rec.file.lock().unwrap_or_else(|e| e.into_inner());
        let mut entries = self.entries.write().unwrap_or_else(|e| e.into_inner());
        if let std::collections::hash_map::Entry::Vacant(e) = entries.entry(hash) {
            file.write_all(line_for(hash, &response).as_bytes())
                .map_err(|e| Error::io(&rec.path, e))?;
            e.insert(response.clone());
        }
        Ok(response)
    }
}
