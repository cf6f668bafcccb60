use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Versioned editorial rewrite template.
pub const DEFAULT_TEMPLATE: &str = include_str!("../../data/rewrite_prompt.v1.txt");

/// Marker replaced by the newspaper name.
pub const PLACEHOLDER: &str = "{{newspaper}}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewritePrompt {
    pub newspaper_name: String,
    pub template_text: String,
    pub rendered: String,
}

impl RewritePrompt {
    /// Number of placeholder positions in the template.
    pub fn placeholder_count(&self) -> usize {
        self.template_text.matches(PLACEHOLDER).count()
    }
}

pub fn build_prompt(newspaper_name: &str) -> Result<RewritePrompt> {
    build_prompt_from_template(DEFAULT_TEMPLATE, newspaper_name)
}

/// Literal substitution of every placeholder; the name is never treated as
/// a pattern.
pub fn build_prompt_from_template(template: &str, newspaper_name: &str) -> Result<RewritePrompt> {
    if newspaper_name.trim().is_empty() {
        return Err(Error::InvalidInput("newspaper name must be non-empty".into()));
    }
    if !template.contains(PLACEHOLDER) {
        return Err(Error::Config(format!(
            "rewrite template has no {PLACEHOLDER} placeholder"
        )));
    }
    Ok(RewritePrompt {
        newspaper_name: newspaper_name.to_string(),
        template_text: template.to_string(),
        rendered: template.split(PLACEHOLDER).collect::<Vec<_>>().join(newspaper_name),
    })
}
