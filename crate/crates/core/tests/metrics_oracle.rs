use std::collections::BTreeSet;

use decor::corpus::Qrels;
use decor::eval::{hits_at_k, map_at_k, mrr_at_k, HitsVariant, Run};
use proptest::prelude::*;

#[derive(Debug)]
struct Fixture {
    rankings: Vec<(String, Vec<String>)>,
    gold: Vec<BTreeSet<String>>,
}

impl Fixture {
    fn run(&self) -> Run {
        Run::from_rankings("t", self.rankings.iter().map(|(q, r)| (q.clone(), r.clone())))
    }

    fn qrels(&self) -> Qrels {
        let mut q = Qrels::new();
        for ((qid, _), gold) in self.rankings.iter().zip(&self.gold) {
            q.insert_query(qid);
            for g in gold {
                q.insert(qid, g);
            }
        }
        q
    }

    /// Sorted 1-based ranks of each query's gold passages, for queries with gold.
    fn gold_ranks(&self) -> Vec<(usize, Vec<usize>)> {
        self.rankings
            .iter()
            .zip(&self.gold)
            .filter(|(_, g)| !g.is_empty())
            .map(|((_, ranking), gold)| {
                let mut ranks: Vec<usize> = gold
                    .iter()
                    .filter_map(|g| ranking.iter().position(|p| p == g).map(|i| i + 1))
                    .collect();
                ranks.sort_unstable();
                (gold.len(), ranks)
            })
            .collect()
    }
}

fn brute(f: &Fixture, k: usize) -> (f64, f64, f64, f64) {
    let qs = f.gold_ranks();
    let total_gold: usize = qs.iter().map(|(g, _)| g).sum();
    let within = |ranks: &Vec<usize>| ranks.iter().filter(|&&r| r <= k).count();
    let micro = if total_gold == 0 { 0.0 } else { qs.iter().map(|(_, r)| within(r)).sum::<usize>() as f64 / total_gold as f64 };
    let n = qs.len() as f64;
    if qs.is_empty() {
        return (micro, 0.0, 0.0, 0.0);
    }
    let macro_ = qs.iter().filter(|(_, r)| within(r) > 0).count() as f64 / n;
    let map = qs
        .iter()
        .map(|(g, ranks)| {
            let s: f64 = ranks.iter().filter(|&&r| r <= k).enumerate().map(|(j, &r)| (j + 1) as f64 / r as f64).sum();
            s / (*g).min(k) as f64
        })
        .sum::<f64>()
        / n;
    let mrr = qs
        .iter()
        .map(|(_, ranks)| ranks.first().filter(|&&r| r <= k).map_or(0.0, |&r| 1.0 / r as f64))
        .sum::<f64>()
        / n;
    (micro, macro_, map, mrr)
}

fn fixture() -> impl Strategy<Value = Fixture> {
    prop::collection::vec(
        (
            (Just((0u32..20).collect::<Vec<_>>()).prop_shuffle(), 0usize..15)
                .prop_map(|(pool, len)| pool[..len].to_vec()),
            prop::collection::btree_set(0u32..20, 0..5),
        ),
        1..10,
    )
    .prop_map(|qs| Fixture {
        rankings: qs
            .iter()
            .enumerate()
            .map(|(i, (r, _))| (format!("q{i}"), r.iter().map(|p| format!("p{p}")).collect()))
            .collect(),
        gold: qs.iter().map(|(_, g)| g.iter().map(|p| format!("p{p}")).collect()).collect(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn metrics_match_rank_enumeration(f in fixture(), k in 1usize..16) {
        let (run, qrels) = (f.run(), f.qrels());
        let (micro, macro_, map, mrr) = brute(&f, k);
        prop_assert!((hits_at_k(&run, &qrels, k, HitsVariant::Micro).unwrap() - micro).abs() < 1e-12);
        prop_assert!((hits_at_k(&run, &qrels, k, HitsVariant::Macro).unwrap() - macro_).abs() < 1e-12);
        prop_assert!((map_at_k(&run, &qrels, k).unwrap() - map).abs() < 1e-12);
        prop_assert!((mrr_at_k(&run, &qrels, k).unwrap() - mrr).abs() < 1e-12);
    }

    #[test]
    fn non_decreasing_in_k(f in fixture(), k in 1usize..15) {
        let (run, qrels) = (f.run(), f.qrels());
        for v in [HitsVariant::Micro, HitsVariant::Macro] {
            prop_assert!(hits_at_k(&run, &qrels, k, v).unwrap() <= hits_at_k(&run, &qrels, k + 1, v).unwrap());
        }
        prop_assert!(mrr_at_k(&run, &qrels, k).unwrap() <= mrr_at_k(&run, &qrels, k + 1).unwrap());
    }

    #[test]
    fn query_order_does_not_matter(f in fixture(), k in 1usize..16) {
        let qrels = f.qrels();
        let reversed = Run::from_rankings("t", f.rankings.iter().rev().map(|(q, r)| (q.clone(), r.clone())));
        let run = f.run();
        prop_assert_eq!(map_at_k(&run, &qrels, k).unwrap(), map_at_k(&reversed, &qrels, k).unwrap());
        prop_assert_eq!(mrr_at_k(&run, &qrels, k).unwrap(), mrr_at_k(&reversed, &qrels, k).unwrap());
        prop_assert_eq!(
            hits_at_k(&run, &qrels, k, HitsVariant::Micro).unwrap(),
            hits_at_k(&reversed, &qrels, k, HitsVariant::Micro).unwrap()
        );
    }

    #[test]
    fn promoting_a_gold_passage_never_hurts(f in fixture(), k in 1usize..16, pick in any::<prop::sample::Index>()) {
        let qrels = f.qrels();
        // find a gold passage not at rank 1 and swap it one place up
        let mut candidates = Vec::new();
        for (qi, ((_, ranking), gold)) in f.rankings.iter().zip(&f.gold).enumerate() {
            for (pos, p) in ranking.iter().enumerate().skip(1) {
                if gold.contains(p) && !gold.contains(&ranking[pos - 1]) {
                    candidates.push((qi, pos));
                }
            }
        }
        prop_assume!(!candidates.is_empty());
        let (qi, pos) = candidates[pick.index(candidates.len())];
        let mut rankings = f.rankings.clone();
        rankings[qi].1.swap(pos - 1, pos);
        let better = Run::from_rankings("t", rankings);
        let run = f.run();
        for v in [HitsVariant::Micro, HitsVariant::Macro] {
            prop_assert!(hits_at_k(&better, &qrels, k, v).unwrap() >= hits_at_k(&run, &qrels, k, v).unwrap());
        }
        prop_assert!(map_at_k(&better, &qrels, k).unwrap() >= map_at_k(&run, &qrels, k).unwrap() - 1e-15);
        prop_assert!(mrr_at_k(&better, &qrels, k).unwrap() >= mrr_at_k(&run, &qrels, k).unwrap());
    }
}

#[test]
fn boundary_cases() {
    let f = Fixture {
        rankings: vec![("q0".into(), vec!["a".into(), "b".into()]), ("q1".into(), vec!["c".into()])],
        gold: vec![["a", "b"].iter().map(|s| s.to_string()).collect(), ["c"].iter().map(|s| s.to_string()).collect()],
    };
    let (run, qrels) = (f.run(), f.qrels());
    assert_eq!(hits_at_k(&run, &qrels, 10, HitsVariant::Micro).unwrap(), 1.0);
    assert_eq!(map_at_k(&run, &qrels, 10).unwrap(), 1.0);
    assert_eq!(mrr_at_k(&run, &qrels, 10).unwrap(), 1.0);

    let miss = Run::from_rankings("t", [("q0", vec!["x", "y"]), ("q1", vec!["z"])]);
    assert_eq!(hits_at_k(&miss, &qrels, 10, HitsVariant::Micro).unwrap(), 0.0);
    assert_eq!(map_at_k(&miss, &qrels, 10).unwrap(), 0.0);
    assert_eq!(mrr_at_k(&miss, &qrels, 10).unwrap(), 0.0);
}
