//! Rewritten-counterpart generation and pair verification.
//!
//! A [`RewriteClient`] turns a human-written body into an edited version
//! under the editorial [`RewritePrompt`]. Each pair is then checked by two
//! gates, word-length ratio and term-frequency cosine similarity, and only
//! accepted pairs become `AiRewritten` articles.

mod client;
mod http;
mod mock;
mod prompt;
mod report;
mod similarity;
mod verify;

pub use client::{
    materialize, rewrite_article, rewrite_batch, RetryPolicy, RewriteClient, RewriteError,
    RewriteResponse, Rewriter,
};
pub use http::{HttpRewriteClient, HttpRewriteConfig, API_KEY_ENV};
pub use mock::{parse_synonyms, MockRewriter, DEFAULT_SYNONYMS};
pub use prompt::{build_prompt, build_prompt_from_template, RewritePrompt, DEFAULT_TEMPLATE, PLACEHOLDER};
pub use report::{synthesis_report, LengthRatioDistribution, SynthesisSummary};
pub use similarity::{cosine_similarity, term_frequencies};
pub use verify::{
    verify_pair, GateConfig, RewriteResult, REASON_EMPTY_OUTPUT, REASON_LENGTH, REASON_LOW_SIMILARITY,
    REASON_PROVIDER_ERROR,
};
