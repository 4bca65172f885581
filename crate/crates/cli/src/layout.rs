//! Where each command reads and writes inside the workdir.

use std::path::{Path, PathBuf};

use decor::corpus::CORPUS_HEADER_FILE;

#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.root.join("corpus")
    }

    pub fn corpus_header(&self) -> PathBuf {
        self.corpus_dir().join(CORPUS_HEADER_FILE)
    }

    pub fn queries(&self) -> PathBuf {
        self.root.join("queries.jsonl")
    }

    pub fn qrels(&self) -> PathBuf {
        self.root.join("qrels.txt")
    }

    pub fn unmatched(&self) -> PathBuf {
        self.root.join("unmatched.json")
    }

    pub fn bm25_index(&self) -> PathBuf {
        self.root.join("index").join("bm25.idx")
    }

    pub fn vector_index(&self) -> PathBuf {
        self.root.join("index").join("vectors.jsonl")
    }

    pub fn run_file(&self, tag: &str) -> PathBuf {
        self.root.join("runs").join(format!("{tag}.run"))
    }

    pub fn trace_file(&self, tag: &str) -> PathBuf {
        self.root.join("runs").join(format!("{tag}.trace.jsonl"))
    }

    pub fn report_json(&self, tag: &str) -> PathBuf {
        self.root.join("reports").join(format!("{tag}.json"))
    }

    pub fn report_text(&self, tag: &str) -> PathBuf {
        self.root.join("reports").join(format!("{tag}.txt"))
    }

    pub fn comparison(&self, ext: &str) -> PathBuf {
        self.root.join("reports").join(format!("comparison.{ext}"))
    }
}
