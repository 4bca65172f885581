use decor::embedding::Embedding;
use decor::pipeline::expansion_embedding;
use proptest::prelude::*;

fn vectors() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..64, 1usize..=7).prop_flat_map(|(dim, count)| {
        prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), count)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn equals_the_arithmetic_mean(parts in vectors()) {
        let embeddings: Vec<Embedding> = parts.iter().map(|p| Embedding::new(p.clone()).unwrap()).collect();
        let got = expansion_embedding(&embeddings[0], &embeddings[1..]).unwrap();
        let count = parts.len() as f64;
        for (j, v) in got.values().iter().enumerate() {
            let mut sum = 0.0;
            for p in &parts {
                sum += p[j];
            }
            prop_assert!((v - sum / count).abs() <= 1e-9);
            // divisor bookkeeping: mean times the component count recovers the sum
            prop_assert!((v * count - sum).abs() <= 1e-9);
        }
    }

    #[test]
    fn pair_order_does_not_matter(parts in vectors(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let embeddings: Vec<Embedding> = parts.iter().map(|p| Embedding::new(p.clone()).unwrap()).collect();
        let mut shuffled = embeddings[1..].to_vec();
        shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let a = expansion_embedding(&embeddings[0], &embeddings[1..]).unwrap();
        let b = expansion_embedding(&embeddings[0], &shuffled).unwrap();
        prop_assert_eq!(a, b);
    }
}
