use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// One ranked retrieval result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHit {
    pub passage_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Descending score, then ascending passage id.
pub(crate) fn by_score_then_id(a: &(f64, &str), b: &(f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Sorts `(score, passage_id)` pairs into a ranked list truncated to `k`.
pub(crate) fn rank_top_k(mut scored: Vec<(f64, &str)>, k: usize) -> Vec<ScoredHit> {
    if scored.len() > k && k > 0 {
        scored.select_nth_unstable_by(k - 1, by_score_then_id);
        scored.truncate(k);
    }
    scored.sort_unstable_by(by_score_then_id);
    scored.truncate(k);
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (score, id))| ScoredHit {
            passage_id: id.to_owned(),
            score,
            rank: i + 1,
        })
        .collect()
}
