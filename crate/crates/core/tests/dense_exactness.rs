use decor::embedding::{cosine, dense_search, Embedding, VectorIndex};
use proptest::prelude::*;

fn brute_force(rows: &[Vec<f64>], ids: &[String], q: &[f64], k: usize) -> Vec<(String, f64)> {
    let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut scored: Vec<(String, f64)> = rows
        .iter()
        .zip(ids)
        .map(|(r, id)| {
            let rn = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dot: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            (id.clone(), dot / (rn * qn))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

fn nonzero_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn case() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (2usize..24).prop_flat_map(|dim| {
        (
            prop::collection::vec(nonzero_vec(dim), 1..200),
            prop::collection::vec(nonzero_vec(dim), 1..8),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn search_equals_brute_force((rows, queries) in case(), factor in 0.01f64..100.0) {
        let ids: Vec<String> = (0..rows.len()).map(|i| format!("p{i:04}")).collect();
        let embeddings: Vec<Embedding> = rows.iter().map(|r| Embedding::new(r.clone()).unwrap()).collect();
        let index = VectorIndex::from_embeddings("m", ids.clone(), &embeddings).unwrap();
        for q in &queries {
            let qe = Embedding::new(q.clone()).unwrap();
            let got = dense_search(&index, &qe, rows.len()).unwrap();
            let want = brute_force(&rows, &ids, q, rows.len());
            let got_ids: Vec<&str> = got.iter().map(|h| h.passage_id.as_str()).collect();
            let want_ids: Vec<&str> = want.iter().map(|(id, _)| id.as_str()).collect();
            prop_assert_eq!(got_ids, want_ids);
            for (h, (_, s)) in got.iter().zip(&want) {
                prop_assert!((h.score - s).abs() < 1e-12);
            }
            let scaled = dense_search(&index, &qe.scaled(factor), rows.len()).unwrap();
            let a: Vec<&str> = scaled.iter().map(|h| h.passage_id.as_str()).collect();
            let b: Vec<&str> = got.iter().map(|h| h.passage_id.as_str()).collect();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn cosine_is_scale_invariant(a in nonzero_vec(6), b in nonzero_vec(6), f in 0.01f64..100.0) {
        let (a, b) = (Embedding::new(a).unwrap(), Embedding::new(b).unwrap());
        let c = cosine(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&c));
        prop_assert!((cosine(&a.scaled(f), &b).unwrap() - c).abs() < 1e-12);
    }
}

#[test]
fn duplicate_rows_tie_break_by_id() {
    let v = Embedding::new(vec![0.6, 0.8]).unwrap();
    let index = VectorIndex::from_embeddings(
        "m",
        vec!["b".into(), "a".into(), "c".into()],
        &[v.clone(), v.clone(), Embedding::new(vec![1.0, 0.0]).unwrap()],
    )
    .unwrap();
    let ids: Vec<String> = index.search(&v, 3).unwrap().into_iter().map(|h| h.passage_id).collect();
    assert_eq!(ids, ["a", "b", "c"]);
}
