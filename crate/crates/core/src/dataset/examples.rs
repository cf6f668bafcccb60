use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Article, OriginLabel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub label: OriginLabel,
    pub source: String,
    pub year: i32,
}

/// One example per article, ordered by id. Every article must carry an
/// origin label and ids must be unique across both inputs.
pub fn make_examples(human: &[Article], rewritten: &[Article]) -> Result<Vec<LabeledExample>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(human.len() + rewritten.len());
    for a in human.iter().chain(rewritten) {
        let label = a.origin.ok_or_else(|| Error::Unlabeled(a.id.clone()))?;
        if a.body.trim().is_empty() {
            return Err(Error::InvalidInput(format!("article {} has an empty body", a.id)));
        }
        if !seen.insert(a.id.as_str()) {
            return Err(Error::DuplicateId(a.id.clone()));
        }
        out.push(LabeledExample {
            id: a.id.clone(),
            text: a.body.clone(),
            label,
            source: a.source.clone(),
            year: a.year(),
        });
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

impl LabeledExample {
    pub fn is(&self, label: OriginLabel) -> bool {
        self.label == label
    }
}
