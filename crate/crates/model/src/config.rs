use serde::{Deserialize, Serialize};

use crate::{ModelError, Result};

/// BERT-style encoder hyperparameters, read from and written to a
/// Hugging Face `config.json` (unknown keys are ignored on read).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_hidden_layers: usize,
    pub num_attention_heads: usize,
    pub intermediate_size: usize,
    #[serde(default = "default_positions")]
    pub max_position_embeddings: usize,
    #[serde(default = "default_type_vocab")]
    pub type_vocab_size: usize,
    #[serde(default = "default_eps")]
    pub layer_norm_eps: f64,
    #[serde(default = "default_dropout")]
    pub hidden_dropout_prob: f64,
    #[serde(default = "default_dropout")]
    pub attention_probs_dropout_prob: f64,
    #[serde(default = "default_act")]
    pub hidden_act: String,
    #[serde(default = "default_init_range")]
    pub initializer_range: f64,
    #[serde(default)]
    pub model_type: Option<String>,
}

fn default_positions() -> usize {
    512
}
fn default_type_vocab() -> usize {
    2
}
fn default_eps() -> f64 {
    1e-12
}
fn default_dropout() -> f64 {
    0.1
}
fn default_act() -> String {
    "gelu".into()
}
fn default_init_range() -> f64 {
    0.02
}

pub const BUILTIN_PREFIX: &str = "builtin:";

impl EncoderConfig {
    /// Named presets for randomly initialized encoders.
    ///
    /// `tiny` is 2 layers of width 64; `small` is 4 layers of width 256.
    pub fn preset(name: &str, vocab_size: usize, max_positions: usize) -> Result<Self> {
        let (hidden, layers, heads, inter) = match name {
            "tiny" => (64, 2, 4, 128),
            "small" => (256, 4, 4, 1024),
            other => return Err(ModelError::Config(format!("unknown builtin encoder {other:?}"))),
        };
        Ok(EncoderConfig {
            vocab_size,
            hidden_size: hidden,
            num_hidden_layers: layers,
            num_attention_heads: heads,
            intermediate_size: inter,
            max_position_embeddings: max_positions,
            type_vocab_size: 2,
            layer_norm_eps: 1e-12,
            hidden_dropout_prob: 0.1,
            attention_probs_dropout_prob: 0.1,
            hidden_act: "gelu".into(),
            initializer_range: 0.02,
            model_type: Some("bert".into()),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 || self.num_attention_heads == 0 || !self.hidden_size.is_multiple_of(self.num_attention_heads) {
            return Err(ModelError::Config(format!(
                "hidden_size {} must be a positive multiple of num_attention_heads {}",
                self.hidden_size, self.num_attention_heads
            )));
        }
        if self.vocab_size == 0 || self.max_position_embeddings == 0 || self.type_vocab_size == 0 {
            return Err(ModelError::Config("vocabulary and embedding tables must be non-empty".into()));
        }
        if !matches!(self.hidden_act.as_str(), "gelu" | "gelu_new" | "relu") {
            return Err(ModelError::Config(format!("unsupported activation {:?}", self.hidden_act)));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_size / self.num_attention_heads
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_hf_config() {
        let text = r#"{"architectures": ["BertForMaskedLM"], "attention_probs_dropout_prob": 0.1,
            "hidden_act": "gelu", "hidden_dropout_prob": 0.1, "hidden_size": 768,
            "initializer_range": 0.02, "intermediate_size": 3072, "layer_norm_eps": 1e-12,
            "max_position_embeddings": 512, "model_type": "bert", "num_attention_heads": 12,
            "num_hidden_layers": 12, "pad_token_id": 0, "type_vocab_size": 2, "vocab_size": 32000}"#;
        let c: EncoderConfig = serde_json::from_str(text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.head_dim(), 64);
    }

    #[test]
    fn presets() {
        let c = EncoderConfig::preset("tiny", 100, 512).unwrap();
        c.validate().unwrap();
        assert_eq!(c.head_dim(), 16);
        assert!(EncoderConfig::preset("huge", 100, 512).is_err());
    }
}
