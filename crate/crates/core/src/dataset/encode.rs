use serde::{Deserialize, Serialize};

use super::{LabeledExample, WordPieceTokenizer};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    MaxLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Keep the head of the article, drop the tail.
    Tail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizationSpec {
    /// Encoder identifier the vocabulary belongs to.
    pub vocabulary: String,
    pub max_length: usize,
    pub padding: Padding,
    pub truncation: Truncation,
}

impl TokenizationSpec {
    pub fn new(vocabulary: impl Into<String>, max_length: usize) -> Result<Self> {
        if max_length < 2 {
            return Err(Error::Config(format!("max_length {max_length} cannot hold [CLS] and [SEP]")));
        }
        Ok(TokenizationSpec {
            vocabulary: vocabulary.into(),
            max_length,
            padding: Padding::MaxLength,
            truncation: Truncation::Tail,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    pub input_ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
    /// Human 0, AI 1; `None` for unlabeled text.
    pub label: Option<u8>,
}

impl Encoding {
    pub fn real_tokens(&self) -> usize {
        self.attention_mask.iter().filter(|&&m| m == 1).count()
    }
}

/// `[CLS] tokens [SEP]`, truncated and padded to exactly `max_length`.
pub fn encode_text(text: &str, tokenizer: &WordPieceTokenizer, spec: &TokenizationSpec) -> Encoding {
    let max = spec.max_length.max(2);
    let mut pieces = tokenizer.tokenize(text);
    pieces.truncate(max - 2);

    let mut input_ids = Vec::with_capacity(max);
    input_ids.push(tokenizer.cls_id());
    input_ids.extend(pieces);
    input_ids.push(tokenizer.sep_id());
    let real = input_ids.len();
    input_ids.resize(max, tokenizer.pad_id());

    let mut attention_mask = vec![1u8; real];
    attention_mask.resize(max, 0);
    Encoding {
        input_ids,
        attention_mask,
        label: None,
    }
}

pub fn encode(example: &LabeledExample, tokenizer: &WordPieceTokenizer, spec: &TokenizationSpec) -> Encoding {
    Encoding {
        label: Some(example.label.index() as u8),
        ..encode_text(&example.text, tokenizer, spec)
    }
}
