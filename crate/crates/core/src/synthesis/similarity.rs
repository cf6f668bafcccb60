use std::collections::BTreeMap;

use num_traits::Float;

use crate::{Error, Result};

/// Whitespace-token counts, in lexical token order.
pub fn term_frequencies(text: &str) -> BTreeMap<&str, u64> {
    let mut tf = BTreeMap::new();
    for tok in text.split_whitespace() {
        *tf.entry(tok).or_insert(0) += 1;
    }
    tf
}

/// Cosine similarity of raw term-frequency vectors over the pair's union
/// vocabulary. Inputs are expected to be cleaned already.
pub fn cosine_similarity<F: Float>(a: &str, b: &str) -> Result<F> {
    let ta = term_frequencies(a);
    let tb = term_frequencies(b);
    if ta.is_empty() || tb.is_empty() {
        return Err(Error::InvalidInput(
            "cosine similarity needs two non-empty texts".into(),
        ));
    }
    let f = |n: u64| F::from(n).expect("count fits float");

    let dot = ta
        .iter()
        .filter_map(|(t, &x)| tb.get(t).map(|&y| f(x) * f(y)))
        .fold(F::zero(), |acc, v| acc + v);
    let sq = |m: &BTreeMap<&str, u64>| m.values().fold(F::zero(), |acc, &x| acc + f(x) * f(x));
    let sim = dot / (sq(&ta) * sq(&tb)).sqrt();
    // rounding can push identical vectors a hair above 1
    Ok(sim.min(F::one()).max(F::zero()))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn hand_cases() {
        assert_eq!(cosine_similarity::<f64>("a b", "a b").unwrap(), 1.0);
        assert_eq!(cosine_similarity::<f64>("a b", "c d").unwrap(), 0.0);
        let v = cosine_similarity::<f64>("a a b", "a b b").unwrap();
        assert!((v - 0.8).abs() < 1e-12);
    }

    #[test]
    fn empty_rejected() {
        assert!(cosine_similarity::<f64>("", "a").is_err());
        assert!(cosine_similarity::<f64>("a", "   ").is_err());
    }

    #[test]
    fn f32_instantiation() {
        let v = cosine_similarity::<f32>("a a b", "a b b").unwrap();
        assert!((v - 0.8).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn symmetric_bounded_reflexive(a in "[abcde]( [abcde]){0,12}", b in "[abcde]( [abcde]){0,12}") {
            let ab = cosine_similarity::<f64>(&a, &b).unwrap();
            let ba = cosine_similarity::<f64>(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((cosine_similarity::<f64>(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
