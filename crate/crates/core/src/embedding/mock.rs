//! Deterministic signed feature-hashing encoder for tests and offline runs.
//!
//! Each token adds +1 at `h1(t) mod dim` and ±1 (sign from the low bit of
//! `h2(t)`) at `h3(t) mod dim`; the result is L2-normalized. A text without
//! tokens maps to the unit vector e₀.

use crate::embedding::Embedding;
use crate::hash::seeded_hash;
use crate::sparse::tokenize;

pub const SEED_SLOT: u64 = 0x6a09_e667_f3bc_c908;
pub const SEED_SIGN: u64 = 0xbb67_ae85_84ca_a73b;
pub const SEED_SIGNED_SLOT: u64 = 0x3c6e_f372_fe94_f82b;

pub fn mock_hashed_bow(text: &str, dim: usize) -> Embedding {
    assert!(dim >= 2, "mock encoder needs dim >= 2");
    let modulus = dim as u64;
    let mut values = vec![0.0f64; dim];
    for token in tokenize(text) {
        values[(seeded_hash(&token, SEED_SLOT) % modulus) as usize] += 1.0;
        let sign = if seeded_hash(&token, SEED_SIGN) & 1 == 0 { 1.0 } else { -1.0 };
        values[(seeded_hash(&token, SEED_SIGNED_SLOT) % modulus) as usize] += sign;
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        values[0] = 1.0;
    } else {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    Embedding::new(values).expect("finite by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cosine;

    #[test]
    fn empty_text_is_e0() {
        let e = mock_hashed_bow("", 8);
        assert_eq!(e.values()[0], 1.0);
        assert!(e.values()[1..].iter().all(|&v| v == 0.0));
        assert_eq!(mock_hashed_bow("?!  ...", 8), e);
    }

    #[test]
    fn deterministic_and_unit() {
        let a = mock_hashed_bow("the quick brown fox", 8);
        assert_eq!(a, mock_hashed_bow("the quick brown fox", 8));
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repetition_scales_away() {
        assert_eq!(mock_hashed_bow("cat", 256), mock_hashed_bow("cat cat", 256));
    }

    #[test]
    fn word_order_is_irrelevant() {
        assert_eq!(
            mock_hashed_bow("red cat hat", 64),
            mock_hashed_bow("hat red cat", 64)
        );
    }

    // Reference values come from the independent Python oracle in
    // fixtures/planted/oracle.py.
    #[test]
    fn lexical_overlap_ranks_higher() {
        let rc = mock_hashed_bow("red cat", 256);
        let near = cosine(&rc, &mock_hashed_bow("red cat hat", 256)).unwrap();
        let far = cosine(&rc, &mock_hashed_bow("blue dog", 256)).unwrap();
        assert!((near - 0.816_496_580_928).abs() < 1e-9);
        assert!(far.abs() < 1e-12);
        assert!(near > far);
    }
}
