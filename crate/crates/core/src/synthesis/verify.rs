use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Article;

pub const REASON_PROVIDER_ERROR: &str = "provider_error";
pub const REASON_EMPTY_OUTPUT: &str = "empty_output";
pub const REASON_LENGTH: &str = "length_out_of_band";
pub const REASON_LOW_SIMILARITY: &str = "low_similarity";
const REASON_ORIGINAL_MISMATCH: &str = "original_mismatch";

/// Acceptance thresholds for a rewritten pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateConfig {
    pub min_length_ratio: f64,
    pub max_length_ratio: f64,
    pub min_cosine: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            min_length_ratio: 0.80,
            max_length_ratio: 1.25,
            min_cosine: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteResult {
    pub original_id: String,
    pub rewritten_text: String,
    /// Rewritten word count over original word count.
    pub length_ratio: f64,
    pub cosine_similarity: f64,
    pub accepted: bool,
    pub rejection_reasons: Vec<String>,
    pub provider_metadata: BTreeMap<String, String>,
}

impl RewriteResult {
    pub(crate) fn rejected(original_id: &str, reason: &str, metadata: BTreeMap<String, String>) -> Self {
        RewriteResult {
            original_id: original_id.to_string(),
            rewritten_text: String::new(),
            length_ratio: 0.0,
            cosine_similarity: 0.0,
            accepted: false,
            rejection_reasons: vec![reason.to_string()],
            provider_metadata: metadata,
        }
    }
}

/// Re-evaluates the length and similarity gates.
///
/// Previous gate verdicts are discarded before evaluation, so calling this
/// repeatedly with different gates is safe. Provider and empty-output
/// rejections are terminal and skip the gates.
pub fn verify_pair(original: &Article, mut result: RewriteResult, gates: &GateConfig) -> RewriteResult {
    result
        .rejection_reasons
        .retain(|r| r != REASON_LENGTH && r != REASON_LOW_SIMILARITY && r != REASON_ORIGINAL_MISMATCH);

    let terminal = result
        .rejection_reasons
        .iter()
        .any(|r| r == REASON_PROVIDER_ERROR || r == REASON_EMPTY_OUTPUT);

    if !terminal {
        if original.id != result.original_id {
            result.rejection_reasons.push(REASON_ORIGINAL_MISMATCH.into());
        }
        let r = result.length_ratio;
        if !(r >= gates.min_length_ratio && r <= gates.max_length_ratio) {
            result.rejection_reasons.push(REASON_LENGTH.into());
        }
        if !(result.cosine_similarity >= gates.min_cosine) {
            result.rejection_reasons.push(REASON_LOW_SIMILARITY.into());
        }
    }
    result.accepted = result.rejection_reasons.is_empty();
    result
}
