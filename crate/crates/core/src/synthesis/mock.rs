use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::client::{RewriteClient, RewriteError, RewriteResponse};
use crate::corpus::turkish_lowercase;
use crate::fingerprint::sha256_hex;
use crate::{Error, Result};

/// Bundled synonym table (`word<TAB>replacement`, `#` comments).
pub const DEFAULT_SYNONYMS: &str = include_str!("../../data/mock_synonyms.tsv");

pub fn parse_synonyms(text: &str) -> Result<BTreeMap<String, String>> {
    let mut table = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, replacement) = line
            .split_once('\t')
            .ok_or_else(|| Error::Config(format!("synonym table line {}: expected a tab", i + 1)))?;
        table.insert(turkish_lowercase(word.trim()), replacement.trim().to_string());
    }
    Ok(table)
}

/// Offline rewriter: replaces a seeded fraction of table words with their
/// synonyms and normalizes punctuation spacing.
///
/// The random stream is derived from the seed and the body alone, so the
/// output for an article does not depend on call order or thread count.
#[derive(Debug, Clone)]
pub struct MockRewriter {
    seed: u64,
    fraction: f64,
    table: BTreeMap<String, String>,
}

impl MockRewriter {
    pub const MODEL_NAME: &'static str = "mock-synonym-v1";

    pub fn new(seed: u64, fraction: f64, table: BTreeMap<String, String>) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Config(format!("mock fraction {fraction} outside [0, 1]")));
        }
        Ok(MockRewriter { seed, fraction, table })
    }

    pub fn with_defaults(seed: u64) -> Self {
        let table = parse_synonyms(DEFAULT_SYNONYMS).expect("bundled synonym table parses");
        MockRewriter::new(seed, 0.35, table).expect("default fraction is valid")
    }

    pub fn rewrite_text(&self, body: &str) -> String {
        let digest = sha256_hex(body);
        let body_seed = u64::from_str_radix(&digest[..16], 16).expect("hex digest");
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ body_seed);

        let words: Vec<String> = body
            .split_whitespace()
            .map(|tok| {
                let (lead, core, trail) = split_token(tok);
                match self.table.get(&turkish_lowercase(core)) {
                    Some(rep) if rng.random_bool(self.fraction) => {
                        format!("{lead}{}{trail}", match_case(core, rep))
                    }
                    _ => tok.to_string(),
                }
            })
            .collect();
        normalize_punctuation(&words.join(" "))
    }
}

impl RewriteClient for MockRewriter {
    fn rewrite(&self, _prompt: &str, article_body: &str) -> Result<RewriteResponse, RewriteError> {
        let mut metadata = BTreeMap::new();
        metadata.insert("model".into(), Self::MODEL_NAME.into());
        metadata.insert("seed".into(), self.seed.to_string());
        Ok(RewriteResponse {
            text: self.rewrite_text(article_body),
            metadata,
        })
    }
}

fn split_token(tok: &str) -> (&str, &str, &str) {
    let start = tok.find(|c: char| c.is_alphanumeric()).unwrap_or(tok.len());
    let end = tok
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_alphanumeric())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(start)
        .max(start);
    (&tok[..start], &tok[start..end], &tok[end..])
}

fn match_case(original: &str, replacement: &str) -> String {
    let upper_first = original.chars().next().is_some_and(char::is_uppercase);
    if !upper_first {
        return replacement.to_string();
    }
    let mut chars = replacement.chars();
    match chars.next() {
        Some('i') => format!("İ{}", chars.as_str()),
        Some('ı') => format!("I{}", chars.as_str()),
        Some(c) => format!("{}{}", c.to_uppercase(), chars.as_str()),
        None => String::new(),
    }
}

fn normalize_punctuation(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 1);
    for c in text.chars() {
        if matches!(c, ',' | '.' | ';' | ':' | '!' | '?') {
            while out.ends_with(' ') {
                out.pop();
            }
            if out.ends_with(c) && c != '.' {
                continue;
            }
        }
        out.push(c);
    }
    let trimmed = out.trim_end();
    let mut out = trimmed.to_string();
    if !out.is_empty() && !out.ends_with(['.', '!', '?', '"', '”']) {
        out.push('.');
    }
    out
}
