use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Qrels;
use crate::error::{Error, Result};
use crate::eval::metrics::{query_ap, query_hits, query_rr, scored_queries};
use crate::eval::{HitsVariant, Metric, MetricSpec, Run};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub metric: MetricSpec,
    /// In [0, 1].
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query_id: String,
    pub num_gold: usize,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub run_tag: String,
    pub hits_variant: HitsVariant,
    /// Scored queries: in the run and with at least one gold passage.
    pub num_queries: usize,
    /// Gold passages over the scored queries.
    pub num_gold: usize,
    /// Qrels queries with gold passages that the run does not contain.
    pub missing_queries: Vec<String>,
    pub metrics: Vec<MetricValue>,
    pub definitions: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_query: Option<Vec<QueryMetrics>>,
}

impl MetricReport {
    pub fn value(&self, spec: MetricSpec) -> Option<f64> {
        self.metrics.iter().find(|m| m.metric == spec).map(|m| m.value)
    }

    /// One `name value` line per metric, values x100 with 2 decimals.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "run {} ({} queries, {} gold, hits {})\n",
            self.run_tag,
            self.num_queries,
            self.num_gold,
            variant_name(self.hits_variant)
        );
        let width = self.metrics.iter().map(|m| m.metric.to_string().len()).max().unwrap_or(0);
        for m in &self.metrics {
            writeln!(out, "  {:<width$}  {:.2}", m.metric.to_string(), m.value * 100.0).expect("String write");
        }
        if !self.missing_queries.is_empty() {
            writeln!(out, "  missing from run: {}", self.missing_queries.len()).expect("String write");
        }
        out
    }
}

fn variant_name(v: HitsVariant) -> &'static str {
    match v {
        HitsVariant::Micro => "micro",
        HitsVariant::Macro => "macro",
    }
}

/// Scores `run` on every metric in `specs`.
pub fn evaluate_run(
    run: &Run,
    qrels: &Qrels,
    specs: &[MetricSpec],
    variant: HitsVariant,
    per_query: bool,
) -> Result<MetricReport> {
    if specs.is_empty() {
        return Err(Error::InvalidConfig("no metrics requested".into()));
    }
    let queries = scored_queries(run, qrels)?;
    let metrics = specs
        .iter()
        .map(|s| Ok(MetricValue { metric: *s, value: s.compute(run, qrels, variant)? }))
        .collect::<Result<Vec<_>>>()?;
    let missing_queries = qrels
        .iter()
        .filter(|(q, gold)| !gold.is_empty() && run.ranking(q).is_none())
        .map(|(q, _)| q.clone())
        .collect();
    let definitions = specs
        .iter()
        .map(|s| (s.to_string(), s.definition(variant)))
        .collect();
    let per_query = per_query.then(|| {
        queries
            .iter()
            .map(|(qid, ranking, gold)| QueryMetrics {
                query_id: (*qid).to_owned(),
                num_gold: gold.len(),
                values: specs
                    .iter()
                    .map(|s| {
                        let v = match (s.metric, variant) {
                            (Metric::Hits, HitsVariant::Micro) => {
                                query_hits(ranking, gold, s.k) as f64 / gold.len() as f64
                            }
                            (Metric::Hits, HitsVariant::Macro) => {
                                f64::from(u8::from(query_hits(ranking, gold, s.k) > 0))
                            }
                            (Metric::Map, _) => query_ap(ranking, gold, s.k),
                            (Metric::Mrr, _) => query_rr(ranking, gold, s.k),
                        };
                        (s.to_string(), v)
                    })
                    .collect(),
            })
            .collect()
    });
    Ok(MetricReport {
        run_tag: run.tag().to_owned(),
        hits_variant: variant,
        num_queries: queries.len(),
        num_gold: queries.iter().map(|(_, _, g)| g.len()).sum(),
        missing_queries,
        metrics,
        definitions,
        per_query,
    })
}

/// Loads a run file and scores it.
pub fn evaluate(
    run_path: &Path,
    qrels: &Qrels,
    specs: &[MetricSpec],
    variant: HitsVariant,
    per_query: bool,
) -> Result<MetricReport> {
    let run = Run::load(run_path)?;
    evaluate_run(&run, qrels, specs, variant, per_query)
}

/// Side-by-side table of several reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub columns: Vec<MetricSpec>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
    /// Per column, the rows holding the best displayed value.
    pub best: Vec<Vec<usize>>,
}

fn percent(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

impl Comparison {
    /// Aligned text; best values per column carry a trailing `*`.
    pub fn to_text(&self) -> String {
        let cell = |r: usize, c: usize| -> String {
            match self.rows[r].1[c] {
                Some(v) if self.best[c].contains(&r) => format!("{}*", percent(v)),
                Some(v) => format!("{} ", percent(v)),
                None => "- ".to_owned(),
            }
        };
        let headers: Vec<String> = self.columns.iter().map(|c| format!("{c} ")).collect();
        let tag_width = self.rows.iter().map(|(t, _)| t.len()).chain([3]).max().unwrap_or(3);
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|c| {
                (0..self.rows.len())
                    .map(|r| cell(r, c).len())
                    .chain([headers[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = format!("{:<tag_width$}", "run");
        for (h, w) in headers.iter().zip(&widths) {
            write!(out, "  {h:>w$}").expect("String write");
        }
        out = out.trim_end().to_owned();
        out.push('\n');
        for (r, (tag, _)) in self.rows.iter().enumerate() {
            let mut line = format!("{tag:<tag_width$}");
            for (c, w) in widths.iter().enumerate() {
                write!(line, "  {:>w$}", cell(r, c)).expect("String write");
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    /// Header, one row per run, then a `best` row naming the winning run(s) per column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run");
        for c in &self.columns {
            write!(out, ",{c}").expect("String write");
        }
        out.push('\n');
        for (tag, values) in &self.rows {
            out.push_str(tag);
            for v in values {
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&percent(*v));
                }
            }
            out.push('\n');
        }
        out.push_str("best");
        for rows in &self.best {
            let tags: Vec<&str> = rows.iter().map(|&r| self.rows[r].0.as_str()).collect();
            write!(out, ",{}", tags.join("|")).expect("String write");
        }
        out.push('\n');
        out
    }
}

/// Columns are every metric of the reports, in first-seen order.
pub fn compare(reports: &[MetricReport]) -> Comparison {
    let mut columns: Vec<MetricSpec> = Vec::new();
    for r in reports {
        for m in &r.metrics {
            if !columns.contains(&m.metric) {
                columns.push(m.metric);
            }
        }
    }
    let rows: Vec<(String, Vec<Option<f64>>)> = reports
        .iter()
        .map(|r| (r.run_tag.clone(), columns.iter().map(|c| r.value(*c)).collect()))
        .collect();
    let best = (0..columns.len())
        .map(|c| {
            let shown: Vec<Option<String>> = rows.iter().map(|(_, v)| v[c].map(percent)).collect();
            let top = rows
                .iter()
                .filter_map(|(_, v)| v[c])
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
            match top {
                None => Vec::new(),
                Some(top) => {
                    let top = percent(top);
                    (0..rows.len()).filter(|&r| shown[r].as_deref() == Some(top.as_str())).collect()
                }
            }
        })
        .collect();
    Comparison { columns, rows, best }
}
