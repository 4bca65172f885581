use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Decor,
    /// Dense retrieval with the raw query embedding.
    Plain,
    /// Mean of the query and a generated passage.
    Hyde,
    /// Query with a generated passage appended, embedded once.
    Query2doc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Decor => "decor",
            Method::Plain => "plain",
            Method::Hyde => "hyde",
            Method::Query2doc => "query2doc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decor" => Ok(Method::Decor),
            "plain" => Ok(Method::Plain),
            "hyde" => Ok(Method::Hyde),
            "query2doc" => Ok(Method::Query2doc),
            _ => Err(Error::InvalidConfig(format!(
                "unknown method {s:?} (expected decor, plain, hyde or query2doc)"
            ))),
        }
    }
}

/// One switch of [`Ablations`], by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    NoDecomposition,
    NoCompression,
    DocumentWiseCompression,
    ConcatEmbedding,
    NoExpansion,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::NoDecomposition,
        Ablation::NoCompression,
        Ablation::DocumentWiseCompression,
        Ablation::ConcatEmbedding,
        Ablation::NoExpansion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::NoDecomposition => "no_decomposition",
            Ablation::NoCompression => "no_compression",
            Ablation::DocumentWiseCompression => "document_wise_compression",
            Ablation::ConcatEmbedding => "concat_embedding",
            Ablation::NoExpansion => "no_expansion",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Ablation::ALL.iter().map(|a| a.name()).collect();
                Error::InvalidConfig(format!("unknown ablation {s:?} (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Ablations {
    /// Use the original query as the only sub-query.
    pub no_decomposition: bool,
    /// Use the raw candidate texts, joined by a space, instead of a summary.
    pub no_compression: bool,
    /// Compress each candidate separately.
    pub document_wise_compression: bool,
    /// Embed one concatenated text instead of averaging embeddings.
    pub concat_embedding: bool,
    /// Skip expansion entirely; overrides every other switch.
    pub no_expansion: bool,
}

impl Ablations {
    pub fn set(&mut self, ablation: Ablation) {
        *self.flag_mut(ablation) = true;
    }

    pub fn is_set(&self, ablation: Ablation) -> bool {
        let mut copy = *self;
        *copy.flag_mut(ablation)
    }

    fn flag_mut(&mut self, ablation: Ablation) -> &mut bool {
        match ablation {
            Ablation::NoDecomposition => &mut self.no_decomposition,
            Ablation::NoCompression => &mut self.no_compression,
            Ablation::DocumentWiseCompression => &mut self.document_wise_compression,
            Ablation::ConcatEmbedding => &mut self.concat_embedding,
            Ablation::NoExpansion => &mut self.no_expansion,
        }
    }

    pub fn enabled(&self) -> Vec<Ablation> {
        Ablation::ALL.into_iter().filter(|a| self.is_set(*a)).collect()
    }

    pub fn any(&self) -> bool {
        !self.enabled().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub method: Method,
    /// BM25 candidates per sub-query.
    pub n: usize,
    /// Hits kept per query in the final ranking.
    pub k: usize,
    pub ablations: Ablations,
    /// Queries executed at the same time by [`run_batch`](super::run_batch).
    pub max_concurrent_queries: usize,
    /// Defaults to [`PipelineConfig::default_run_tag`].
    pub run_tag: Option<String>,
    /// Adds wall-clock stage timings to the trace, which makes it non-reproducible.
    pub trace_timings: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            method: Method::Decor,
            n: 5,
            k: 10,
            ablations: Ablations::default(),
            max_concurrent_queries: 4,
            run_tag: None,
            trace_timings: false,
        }
    }
}

impl PipelineConfig {
    pub fn method(method: Method) -> Self {
        PipelineConfig {
            method,
            ..Self::default()
        }
    }

    pub fn with_ablation(mut self, ablation: Ablation) -> Self {
        self.ablations.set(ablation);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("pipeline.n must be >= 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("pipeline.k must be >= 1".into()));
        }
        if self.max_concurrent_queries == 0 {
            return Err(Error::InvalidConfig(
                "pipeline.max_concurrent_queries must be >= 1".into(),
            ));
        }
        if self.method != Method::Decor && self.ablations.any() {
            return Err(Error::InvalidConfig(format!(
                "ablations apply only to method decor, not {}",
                self.method
            )));
        }
        let a = &self.ablations;
        if a.no_compression && a.document_wise_compression && !a.no_expansion {
            return Err(Error::InvalidConfig(
                "document_wise_compression conflicts with no_compression".into(),
            ));
        }
        if let Some(tag) = &self.run_tag {
            if tag.is_empty() || tag.chars().any(char::is_whitespace) {
                return Err(Error::InvalidConfig(format!(
                    "run_tag {tag:?} must be non-empty with no whitespace"
                )));
            }
        }
        Ok(())
    }

    /// True when the query embedding alone drives retrieval.
    pub fn is_unexpanded(&self) -> bool {
        self.method == Method::Plain || (self.method == Method::Decor && self.ablations.no_expansion)
    }

    /// `decor`, `hyde`, `decor-no_decomposition-concat_embedding`, ...
    pub fn default_run_tag(&self) -> String {
        let mut tag = self.method.name().to_owned();
        for a in self.ablations.enabled() {
            tag.push('-');
            tag.push_str(a.name());
        }
        tag
    }

    pub fn run_tag(&self) -> String {
        self.run_tag.clone().unwrap_or_else(|| self.default_run_tag())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in [Method::Decor, Method::Plain, Method::Hyde, Method::Query2doc] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_value(m).unwrap(), m.name());
        }
        for a in Ablation::ALL {
            assert_eq!(a.name().parse::<Ablation>().unwrap(), a);
        }
        assert!("bogus".parse::<Ablation>().is_err());
        assert!("BM25".parse::<Method>().is_err());
    }

    #[test]
    fn validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let cfg = PipelineConfig::method(Method::Plain).with_ablation(Ablation::NoDecomposition);
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig::default()
            .with_ablation(Ablation::NoCompression)
            .with_ablation(Ablation::DocumentWiseCompression);
        assert!(cfg.validate().is_err());
        assert!(cfg.with_ablation(Ablation::NoExpansion).validate().is_ok());
        let cfg = PipelineConfig { k: 0, ..PipelineConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig { run_tag: Some("a b".into()), ..PipelineConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn run_tags() {
        assert_eq!(PipelineConfig::default().run_tag(), "decor");
        let cfg = PipelineConfig::default()
            .with_ablation(Ablation::ConcatEmbedding)
            .with_ablation(Ablation::NoDecomposition);
        assert_eq!(cfg.run_tag(), "decor-no_decomposition-concat_embedding");
    }

    #[test]
    fn unexpanded_variants() {
        assert!(PipelineConfig::method(Method::Plain).is_unexpanded());
        assert!(PipelineConfig::default().with_ablation(Ablation::NoExpansion).is_unexpanded());
        assert!(!PipelineConfig::default().is_unexpanded());
        assert!(!PipelineConfig::method(Method::Hyde).is_unexpanded());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let err = serde_json::from_str::<PipelineConfig>(r#"{"method":"decor","topk":3}"#);
        assert!(err.is_err());
        let cfg: PipelineConfig =
            serde_json::from_str(r#"{"ablations":{"no_expansion":true},"k":3}"#).unwrap();
        assert!(cfg.ablations.no_expansion && cfg.k == 3 && cfg.n == 5);
    }
}
