use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::Article;
use crate::fingerprint::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DedupConfig {
    /// Trim every source to the smallest per-source count.
    pub equalize_sources: bool,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig {
            equalize_sources: true,
        }
    }
}

/// Duplicate key: hash of the whitespace-collapsed body.
pub fn body_key(body: &str) -> String {
    sha256_hex(body.split_whitespace().collect::<Vec<_>>().join(" "))
}

/// Removes exact duplicate bodies and optionally equalizes per-source counts.
///
/// Articles are ordered by `(source, published_at, id)`; the first article
/// of each duplicate group survives, and equalization keeps the head of each
/// source in that order. The output stays in that order.
pub fn deduplicate(articles: &[Article], config: DedupConfig) -> Vec<Article> {
    let mut sorted: Vec<&Article> = articles.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.source, a.published_at, &a.id).cmp(&(&b.source, b.published_at, &b.id))
    });

    let mut seen = HashSet::new();
    let unique: Vec<&Article> = sorted
        .into_iter()
        .filter(|a| seen.insert(body_key(&a.body)))
        .collect();

    if !config.equalize_sources {
        return unique.into_iter().cloned().collect();
    }

    let mut per_source: BTreeMap<&str, usize> = BTreeMap::new();
    for a in &unique {
        *per_source.entry(a.source.as_str()).or_default() += 1;
    }
    let Some(&quota) = per_source.values().min() else {
        return Vec::new();
    };

    let mut taken: BTreeMap<&str, usize> = BTreeMap::new();
    unique
        .into_iter()
        .filter(|a| {
            let n = taken.entry(a.source.as_str()).or_default();
            *n += 1;
            *n <= quota
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;
    use proptest::prelude::*;

    use super::*;

    fn art(id: &str, source: &str, day: u32, body: &str) -> Article {
        Article {
            id: id.into(),
            source: source.into(),
            published_at: NaiveDate::from_ymd_opt(2021, 1, day).unwrap(),
            title: None,
            body: body.into(),
            origin: None,
        }
    }

    fn counts(xs: &[Article]) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for a in xs {
            *m.entry(a.source.clone()).or_default() += 1;
        }
        m
    }

    #[test]
    fn exact_duplicate_same_source() {
        let xs = vec![art("1", "A", 1, "aynı metin"), art("2", "A", 2, "aynı metin")];
        let out = deduplicate(&xs, DedupConfig::default());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "1");
    }

    #[test]
    fn whitespace_variants_are_duplicates() {
        let xs = vec![art("1", "A", 1, "a  b\nc"), art("2", "A", 2, " a b c ")];
        assert_eq!(deduplicate(&xs, DedupConfig::default()).len(), 1);
    }

    #[test]
    fn equalization() {
        let xs = vec![
            art("a1", "A", 1, "x1"),
            art("a2", "A", 2, "x2"),
            art("a3", "A", 3, "x3"),
            art("b1", "B", 1, "y1"),
            art("b2", "B", 2, "y2"),
        ];
        let out = deduplicate(&xs, DedupConfig::default());
        let c = counts(&out);
        assert_eq!(c["A"], 2);
        assert_eq!(c["B"], 2);
        assert!(out.iter().all(|a| a.id != "a3"));

        let off = deduplicate(&xs, DedupConfig { equalize_sources: false });
        assert_eq!(off.len(), 5);
    }

    #[test]
    fn empty() {
        assert!(deduplicate(&[], DedupConfig::default()).is_empty());
    }

    fn corpus() -> impl Strategy<Value = Vec<Article>> {
        prop::collection::vec((0..3usize, 1..28u32, 0..6usize), 0..40).prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (s, d, b))| {
                    art(&format!("id{i}"), ["A", "B", "C"][s], d, &format!("body {b}"))
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn idempotent(xs in corpus(), eq in any::<bool>()) {
            let cfg = DedupConfig { equalize_sources: eq };
            let once = deduplicate(&xs, cfg);
            prop_assert_eq!(deduplicate(&once, cfg), once);
        }

        #[test]
        fn never_grows_and_never_keeps_duplicates(xs in corpus()) {
            let out = deduplicate(&xs, DedupConfig::default());
            let before = counts(&xs);
            for (src, n) in counts(&out) {
                prop_assert!(n <= before[&src]);
            }
            let keys: HashSet<_> = out.iter().map(|a| body_key(&a.body)).collect();
            prop_assert_eq!(keys.len(), out.len());
            let c = counts(&out);
            let vals: HashSet<_> = c.values().collect();
            prop_assert!(vals.len() <= 1);
        }
    }
}
