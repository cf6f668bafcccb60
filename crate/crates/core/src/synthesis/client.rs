use std::collections::BTreeMap;
use std::time::Duration;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prompt::RewritePrompt;
use super::similarity::cosine_similarity;
use super::verify::{verify_pair, GateConfig, RewriteResult, REASON_EMPTY_OUTPUT, REASON_PROVIDER_ERROR};
use crate::corpus::{word_count, Article, Cleaner, OriginLabel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteResponse {
    pub text: String,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("transient provider failure: {0}")]
    Transient(String),
    #[error("provider failure: {0}")]
    Fatal(String),
}

/// Anything that can rewrite an article body under a system prompt.
pub trait RewriteClient: Send + Sync {
    fn rewrite(&self, prompt: &str, article_body: &str) -> Result<RewriteResponse, RewriteError>;
}

impl<C: RewriteClient + ?Sized> RewriteClient for &C {
    fn rewrite(&self, prompt: &str, article_body: &str) -> Result<RewriteResponse, RewriteError> {
        (**self).rewrite(prompt, article_body)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff_ms: 500,
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    pub fn immediate(max_attempts: u32) -> Self {
        RetryPolicy {
            max_attempts,
            initial_backoff_ms: 0,
            multiplier: 1.0,
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self.initial_backoff_ms as f64 * self.multiplier.powi(attempt as i32);
        Duration::from_millis(ms as u64)
    }

    fn call<C: RewriteClient + ?Sized>(
        &self,
        client: &C,
        prompt: &str,
        body: &str,
    ) -> Result<RewriteResponse, (RewriteError, u32)> {
        let attempts = self.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            match client.rewrite(prompt, body) {
                Ok(r) => return Ok(r),
                Err(e @ RewriteError::Fatal(_)) => return Err((e, attempt + 1)),
                Err(e) => {
                    attempt += 1;
                    if attempt >= attempts {
                        return Err((e, attempt));
                    }
                    std::thread::sleep(self.backoff(attempt - 1));
                }
            }
        }
    }
}

/// Rewrites one human-written article and verifies the pair.
///
/// Both texts go through `normalizer` before the length ratio and cosine
/// similarity are measured. Provider failures and empty outputs come back
/// as rejected results, not errors.
pub fn rewrite_article<C: RewriteClient + ?Sized>(
    article: &Article,
    client: &C,
    prompt: &RewritePrompt,
    normalizer: &Cleaner,
    gates: &GateConfig,
    retry: &RetryPolicy,
) -> Result<RewriteResult> {
    if article.origin == Some(OriginLabel::AiRewritten) {
        return Err(Error::InvalidInput(format!(
            "article {} is already AI-rewritten",
            article.id
        )));
    }
    let original = normalizer.clean(&article.body);
    if original.is_empty() {
        return Err(Error::InvalidInput(format!(
            "article {} has an empty body after normalization",
            article.id
        )));
    }

    let response = match retry.call(client, &prompt.rendered, &article.body) {
        Ok(r) => r,
        Err((e, attempts)) => {
            warn!("rewrite of {} failed after {attempts} attempt(s): {e}", article.id);
            let mut meta = BTreeMap::new();
            meta.insert("error".into(), e.to_string());
            meta.insert("attempts".into(), attempts.to_string());
            return Ok(RewriteResult::rejected(&article.id, REASON_PROVIDER_ERROR, meta));
        }
    };

    let rewritten = normalizer.clean(&response.text);
    if rewritten.is_empty() {
        return Ok(RewriteResult::rejected(&article.id, REASON_EMPTY_OUTPUT, response.metadata));
    }

    let result = RewriteResult {
        original_id: article.id.clone(),
        length_ratio: word_count(&rewritten) as f64 / word_count(&original) as f64,
        cosine_similarity: cosine_similarity(&original, &rewritten)?,
        rewritten_text: response.text,
        accepted: false,
        rejection_reasons: Vec::new(),
        provider_metadata: response.metadata,
    };
    Ok(verify_pair(article, result, gates))
}

/// The rewritten counterpart of an accepted pair: same source and date,
/// origin `AiRewritten`, id suffixed with `-ai`.
pub fn materialize(original: &Article, result: &RewriteResult) -> Option<Article> {
    if !result.accepted || result.original_id != original.id {
        return None;
    }
    Some(Article {
        id: format!("{}-ai", original.id),
        source: original.source.clone(),
        published_at: original.published_at,
        title: original.title.clone(),
        body: result.rewritten_text.clone(),
        origin: Some(OriginLabel::AiRewritten),
    })
}

/// Everything needed to rewrite a corpus except the client itself.
#[derive(Debug, Clone)]
pub struct Rewriter {
    /// Prompt per source id; sources without an entry use `fallback`.
    pub prompts: BTreeMap<String, RewritePrompt>,
    pub fallback: RewritePrompt,
    pub normalizer: Cleaner,
    pub gates: GateConfig,
    pub retry: RetryPolicy,
}

impl Rewriter {
    pub fn prompt_for(&self, source: &str) -> &RewritePrompt {
        self.prompts.get(source).unwrap_or(&self.fallback)
    }
}

/// Rewrites a batch on at most `workers` threads. Results are returned in
/// original-id order whatever the completion order.
pub fn rewrite_batch<C: RewriteClient + ?Sized>(
    articles: &[Article],
    client: &C,
    rewriter: &Rewriter,
    workers: usize,
) -> Result<Vec<RewriteResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut results = pool.install(|| {
        articles
            .par_iter()
            .map(|a| {
                rewrite_article(
                    a,
                    client,
                    rewriter.prompt_for(&a.source),
                    &rewriter.normalizer,
                    &rewriter.gates,
                    &rewriter.retry,
                )
            })
            .collect::<Result<Vec<_>>>()
    })?;
    results.sort_by(|a, b| a.original_id.cmp(&b.original_id));
    Ok(results)
}
