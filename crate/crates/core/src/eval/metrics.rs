use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Qrels;
use crate::error::{Error, Result};
use crate::eval::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HitsVariant {
    /// Gold passages found in the top k over all gold passages.
    #[default]
    Micro,
    /// Queries with at least one gold passage in the top k over all queries.
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Hits,
    Map,
    Mrr,
}

/// A metric at a cutoff, written `hits@10`, `map@10`, `mrr@10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MetricSpec {
    pub metric: Metric,
    pub k: usize,
}

impl MetricSpec {
    pub fn new(metric: Metric, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("metric cutoff k must be >= 1".into()));
        }
        Ok(MetricSpec { metric, k })
    }

    /// hits@10, hits@4, map@10, mrr@10.
    pub fn defaults() -> Vec<MetricSpec> {
        vec![
            MetricSpec { metric: Metric::Hits, k: 10 },
            MetricSpec { metric: Metric::Hits, k: 4 },
            MetricSpec { metric: Metric::Map, k: 10 },
            MetricSpec { metric: Metric::Mrr, k: 10 },
        ]
    }

    pub fn compute(&self, run: &Run, qrels: &Qrels, variant: HitsVariant) -> Result<f64> {
        match self.metric {
            Metric::Hits => hits_at_k(run, qrels, self.k, variant),
            Metric::Map => map_at_k(run, qrels, self.k),
            Metric::Mrr => mrr_at_k(run, qrels, self.k),
        }
    }

    pub fn definition(&self, variant: HitsVariant) -> String {
        let k = self.k;
        match (self.metric, variant) {
            (Metric::Hits, HitsVariant::Micro) => format!(
                "micro-averaged: (query, gold passage) pairs with the passage in the query's top {k}, over all gold pairs"
            ),
            (Metric::Hits, HitsVariant::Macro) => {
                format!("macro-averaged: queries with at least one gold passage in the top {k}, over all queries")
            }
            (Metric::Map, _) => format!(
                "mean over queries of (sum of precision@i over gold hits at rank i <= {k}) / min(|gold|, {k})"
            ),
            (Metric::Mrr, _) => {
                format!("mean over queries of 1/rank of the first gold passage within the top {k}, else 0")
            }
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.metric {
            Metric::Hits => "hits",
            Metric::Map => "map",
            Metric::Mrr => "mrr",
        };
        write!(f, "{name}@{}", self.k)
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("bad metric {s:?} (expected hits@K, map@K or mrr@K)"));
        let (name, k) = s.trim().split_once('@').ok_or_else(bad)?;
        let metric = match name.to_ascii_lowercase().as_str() {
            "hits" => Metric::Hits,
            "map" => Metric::Map,
            "mrr" | "marr" => Metric::Mrr,
            _ => return Err(bad()),
        };
        MetricSpec::new(metric, k.parse().map_err(|_| bad())?)
    }
}

impl Serialize for MetricSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetricSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Query id, ranking and gold set.
pub(crate) type ScoredQuery<'a> = (&'a str, &'a [String], &'a BTreeSet<String>);

/// Run queries that have gold passages, paired with their gold sets.
pub(crate) fn scored_queries<'a>(run: &'a Run, qrels: &'a Qrels) -> Result<Vec<ScoredQuery<'a>>> {
    let mut out = Vec::with_capacity(run.len());
    for (qid, ranking) in run.rankings() {
        let gold = qrels.gold(qid).ok_or_else(|| Error::UnknownQuery(qid.to_owned()))?;
        if !gold.is_empty() {
            out.push((qid, ranking, gold));
        }
    }
    Ok(out)
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidConfig("metric cutoff k must be >= 1".into()));
    }
    Ok(())
}

fn top(ranking: &[String], k: usize) -> &[String] {
    &ranking[..ranking.len().min(k)]
}

pub(crate) fn query_hits(ranking: &[String], gold: &BTreeSet<String>, k: usize) -> usize {
    top(ranking, k).iter().filter(|p| gold.contains(*p)).count()
}

pub(crate) fn query_ap(ranking: &[String], gold: &BTreeSet<String>, k: usize) -> f64 {
    let mut found = 0usize;
    let mut sum = 0.0;
    for (i, p) in top(ranking, k).iter().enumerate() {
        if gold.contains(p) {
            found += 1;
            sum += found as f64 / (i + 1) as f64;
        }
    }
    sum / gold.len().min(k) as f64
}

pub(crate) fn query_rr(ranking: &[String], gold: &BTreeSet<String>, k: usize) -> f64 {
    top(ranking, k)
        .iter()
        .position(|p| gold.contains(p))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Sums in sorted order so the result does not depend on query order.
fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut values: Vec<f64> = values.collect();
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Gold recall within the top `k`; see [`HitsVariant`].
pub fn hits_at_k(run: &Run, qrels: &Qrels, k: usize, variant: HitsVariant) -> Result<f64> {
    check_k(k)?;
    let queries = scored_queries(run, qrels)?;
    Ok(match variant {
        HitsVariant::Micro => {
            let found: usize = queries.iter().map(|(_, r, g)| query_hits(r, g, k)).sum();
            let total: usize = queries.iter().map(|(_, _, g)| g.len()).sum();
            if total == 0 {
                0.0
            } else {
                found as f64 / total as f64
            }
        }
        HitsVariant::Macro => mean(
            queries
                .iter()
                .map(|(_, r, g)| if query_hits(r, g, k) > 0 { 1.0 } else { 0.0 }),
        ),
    })
}

/// Truncated mean average precision with denominator `min(|gold|, k)`.
pub fn map_at_k(run: &Run, qrels: &Qrels, k: usize) -> Result<f64> {
    check_k(k)?;
    let queries = scored_queries(run, qrels)?;
    Ok(mean(queries.iter().map(|(_, r, g)| query_ap(r, g, k))))
}

pub fn mrr_at_k(run: &Run, qrels: &Qrels, k: usize) -> Result<f64> {
    check_k(k)?;
    let queries = scored_queries(run, qrels)?;
    Ok(mean(queries.iter().map(|(_, r, g)| query_rr(r, g, k))))
}
