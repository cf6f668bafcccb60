use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::verify::RewriteResult;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LengthRatioDistribution {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSummary {
    pub no_data: bool,
    pub total: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
    /// Pairs that produced a non-empty rewrite (cosine and ratio defined).
    pub measured: usize,
    pub mean_cosine: f64,
    pub min_cosine: f64,
    pub length_ratio: LengthRatioDistribution,
    pub rejections: BTreeMap<String, usize>,
}

/// Aggregate view of a synthesis run. Similarity and length statistics are
/// taken over every pair that produced text, accepted or not.
pub fn synthesis_report(results: &[RewriteResult]) -> SynthesisSummary {
    if results.is_empty() {
        return SynthesisSummary {
            no_data: true,
            ..SynthesisSummary::default()
        };
    }
    let accepted = results.iter().filter(|r| r.accepted).count();
    let mut rejections = BTreeMap::new();
    for reason in results.iter().flat_map(|r| &r.rejection_reasons) {
        *rejections.entry(reason.clone()).or_insert(0) += 1;
    }

    let measured: Vec<&RewriteResult> = results
        .iter()
        .filter(|r| !r.rewritten_text.trim().is_empty())
        .collect();
    let mut summary = SynthesisSummary {
        no_data: false,
        total: results.len(),
        accepted,
        acceptance_rate: accepted as f64 / results.len() as f64,
        measured: measured.len(),
        rejections,
        ..SynthesisSummary::default()
    };
    if measured.is_empty() {
        return summary;
    }

    let n = measured.len() as f64;
    summary.mean_cosine = measured.iter().map(|r| r.cosine_similarity).sum::<f64>() / n;
    summary.min_cosine = measured
        .iter()
        .map(|r| r.cosine_similarity)
        .fold(f64::INFINITY, f64::min);

    let mut ratios: Vec<f64> = measured.iter().map(|r| r.length_ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = (ratios.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(ratios.len() - 1);
        ratios[lo] + (ratios[hi] - ratios[lo]) * (h - lo as f64)
    };
    summary.length_ratio = LengthRatioDistribution {
        min: ratios[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: ratios[ratios.len() - 1],
        mean: ratios.iter().sum::<f64>() / n,
    };
    summary
}
