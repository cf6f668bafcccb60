use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::Error;

/// Origin of an article body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginLabel {
    #[serde(alias = "human")]
    HumanWritten,
    #[serde(alias = "ai")]
    AiRewritten,
}

impl OriginLabel {
    pub const ALL: [OriginLabel; 2] = [OriginLabel::HumanWritten, OriginLabel::AiRewritten];

    /// Class index used by the classifier: human 0, AI 1.
    pub fn index(self) -> usize {
        match self {
            OriginLabel::HumanWritten => 0,
            OriginLabel::AiRewritten => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(OriginLabel::HumanWritten),
            1 => Some(OriginLabel::AiRewritten),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OriginLabel::HumanWritten => "human_written",
            OriginLabel::AiRewritten => "ai_rewritten",
        }
    }

    pub fn other(self) -> Self {
        match self {
            OriginLabel::HumanWritten => OriginLabel::AiRewritten,
            OriginLabel::AiRewritten => OriginLabel::HumanWritten,
        }
    }
}

impl fmt::Display for OriginLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OriginLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human_written" | "human" => Ok(OriginLabel::HumanWritten),
            "ai_rewritten" | "ai" => Ok(OriginLabel::AiRewritten),
            other => Err(Error::InvalidInput(format!("unknown origin label {other:?}"))),
        }
    }
}

/// One news item.
///
/// Serializes to the JSON-lines corpus format, so written corpora can be
/// ingested again.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub source: String,
    #[serde(rename = "date")]
    pub published_at: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<OriginLabel>,
}

impl Article {
    pub fn year(&self) -> i32 {
        self.published_at.year()
    }
}
