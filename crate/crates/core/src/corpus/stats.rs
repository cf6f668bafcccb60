use std::collections::BTreeMap;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{Article, OriginLabel};
use crate::{Error, Result};

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats<F> {
    pub n: usize,
    pub mean: F,
    pub min: usize,
    pub q1: F,
    pub median: F,
    pub q3: F,
    pub max: usize,
}

impl<F: Float> SummaryStats<F> {
    /// `None` for an empty sample.
    pub fn from_counts(counts: &[usize]) -> Option<Self> {
        if counts.is_empty() {
            return None;
        }
        let mut sorted = counts.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let total: F = sorted.iter().fold(F::zero(), |acc, &c| acc + from_usize::<F>(c));
        Some(SummaryStats {
            n,
            mean: total / from_usize(n),
            min: sorted[0],
            q1: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q3: quantile(&sorted, 0.75),
            max: sorted[n - 1],
        })
    }
}

fn from_usize<F: Float>(n: usize) -> F {
    F::from(n).expect("count fits float")
}

/// Linear interpolation between order statistics (position `(n-1)·p`).
fn quantile<F: Float>(sorted: &[usize], p: f64) -> F {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = F::from(h - lo as f64).unwrap();
    let a = from_usize::<F>(sorted[lo]);
    let b = from_usize::<F>(sorted[hi]);
    a + (b - a) * frac
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats<F> {
    pub total: usize,
    pub per_source: BTreeMap<String, usize>,
    pub bucket_width: usize,
    /// Bucket lower bound → article count.
    pub histogram: BTreeMap<usize, usize>,
    pub overall: SummaryStats<F>,
    /// Only labeled articles contribute here.
    pub per_origin: BTreeMap<OriginLabel, SummaryStats<F>>,
}

/// Word-count statistics; word count is the whitespace-token count.
pub fn word_count_stats<F: Float>(articles: &[Article], bucket_width: usize) -> Result<CorpusStats<F>> {
    if articles.is_empty() {
        return Err(Error::NoData("word_count_stats on an empty corpus".into()));
    }
    if bucket_width == 0 {
        return Err(Error::InvalidInput("bucket_width must be positive".into()));
    }

    let mut per_source = BTreeMap::new();
    let mut histogram = BTreeMap::new();
    let mut all = Vec::with_capacity(articles.len());
    let mut by_origin: BTreeMap<OriginLabel, Vec<usize>> = BTreeMap::new();

    for a in articles {
        let wc = word_count(&a.body);
        *per_source.entry(a.source.clone()).or_default() += 1;
        *histogram.entry(wc / bucket_width * bucket_width).or_default() += 1;
        all.push(wc);
        if let Some(origin) = a.origin {
            by_origin.entry(origin).or_default().push(wc);
        }
    }

    Ok(CorpusStats {
        total: articles.len(),
        per_source,
        bucket_width,
        histogram,
        overall: SummaryStats::from_counts(&all).expect("non-empty"),
        per_origin: by_origin
            .into_iter()
            .filter_map(|(k, v)| SummaryStats::from_counts(&v).map(|s| (k, s)))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;

    use super::*;

    fn art(body: &str, origin: Option<OriginLabel>) -> Article {
        Article {
            id: body.into(),
            source: "A".into(),
            published_at: NaiveDate::from_ymd_opt(2021, 1, 1).unwrap(),
            title: None,
            body: body.into(),
            origin,
        }
    }

    #[test]
    fn single_article() {
        let s = word_count_stats::<f64>(&[art("a b c", None)], 1).unwrap();
        assert_eq!(s.histogram, BTreeMap::from([(3, 1)]));
        assert_eq!(s.overall.mean, 3.0);
        assert!(s.per_origin.is_empty());
    }

    #[test]
    fn mean_and_median_of_two() {
        let ten = vec!["w"; 10].join(" ");
        let twenty = vec!["w"; 20].join(" ");
        let s = word_count_stats::<f64>(
            &[
                art(&ten, Some(OriginLabel::HumanWritten)),
                art(&twenty, Some(OriginLabel::HumanWritten)),
            ],
            5,
        )
        .unwrap();
        assert_eq!(s.overall.mean, 15.0);
        assert_eq!(s.overall.median, 15.0);
        assert_eq!(s.per_origin[&OriginLabel::HumanWritten].n, 2);
        assert_eq!(s.histogram, BTreeMap::from([(10, 1), (20, 1)]));
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(word_count_stats::<f64>(&[], 1), Err(Error::NoData(_))));
    }
}
