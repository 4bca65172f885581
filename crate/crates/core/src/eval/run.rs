use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::RunResult;

/// A parsed run file: per query, passage ids in rank order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Run {
    tag: String,
    queries: Vec<(String, Vec<String>)>,
}

fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedRunFile {
        line,
        reason: reason.into(),
    }
}

impl Run {
    /// Parses `query_id Q0 passage_id rank score run_tag` lines. Within a
    /// query, ranks must read 1, 2, 3, ... in file order.
    pub fn parse(text: &str) -> Result<Self> {
        let mut run = Run::default();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut seen: HashSet<(usize, String)> = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = raw.split_whitespace().collect();
            let [qid, _q0, pid, rank, score, tag] = cols[..] else {
                return Err(malformed(line, format!("expected 6 columns, found {}", cols.len())));
            };
            let rank: usize = rank
                .parse()
                .map_err(|_| malformed(line, format!("rank {rank:?} is not a positive integer")))?;
            let score: f64 = score
                .parse()
                .map_err(|_| malformed(line, format!("score {score:?} is not a number")))?;
            if !score.is_finite() {
                return Err(malformed(line, "score is not finite"));
            }
            if run.tag.is_empty() {
                run.tag = tag.to_owned();
            } else if run.tag != tag {
                return Err(malformed(line, format!("run tag {tag:?} differs from {:?}", run.tag)));
            }
            let slot = *index.entry(qid.to_owned()).or_insert_with(|| {
                run.queries.push((qid.to_owned(), Vec::new()));
                run.queries.len() - 1
            });
            let ranking = &mut run.queries[slot].1;
            if rank != ranking.len() + 1 {
                return Err(malformed(
                    line,
                    format!("query {qid}: rank {rank} follows rank {}", ranking.len()),
                ));
            }
            if !seen.insert((slot, pid.to_owned())) {
                return Err(malformed(line, format!("query {qid}: passage {pid} listed twice")));
            }
            ranking.push(pid.to_owned());
        }
        Ok(run)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Run::parse(&text)
    }

    pub fn from_result(result: &RunResult) -> Self {
        Run {
            tag: result.run_tag.clone(),
            queries: result
                .results
                .iter()
                .map(|r| (r.query_id.clone(), r.hits.iter().map(|h| h.passage_id.clone()).collect()))
                .collect(),
        }
    }

    /// Builds a run from rankings directly, e.g. for tests.
    pub fn from_rankings<Q, P>(tag: &str, rankings: impl IntoIterator<Item = (Q, Vec<P>)>) -> Self
    where
        Q: Into<String>,
        P: Into<String>,
    {
        Run {
            tag: tag.to_owned(),
            queries: rankings
                .into_iter()
                .map(|(q, ps)| (q.into(), ps.into_iter().map(Into::into).collect()))
                .collect(),
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Queries in first-appearance order.
    pub fn rankings(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.queries.iter().map(|(q, r)| (q.as_str(), r.as_slice()))
    }

    pub fn ranking(&self, query_id: &str) -> Option<&[String]> {
        self.queries
            .iter()
            .find(|(q, _)| q == query_id)
            .map(|(_, r)| r.as_slice())
    }
}
