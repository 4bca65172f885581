//! Retrieval metrics over TREC run files and binary qrels.
//!
//! Only queries that appear in the run and have at least one gold passage
//! are scored. Queries in the qrels but absent from the run are listed in
//! [`MetricReport::missing_queries`]; a run query absent from the qrels is
//! an error.

mod metrics;
mod report;
mod run;

pub use metrics::{hits_at_k, map_at_k, mrr_at_k, HitsVariant, Metric, MetricSpec};
pub use report::{compare, evaluate, evaluate_run, Comparison, MetricReport, MetricValue, QueryMetrics};
pub use run::Run;
