use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("tensor error: {0}")]
    Candle(#[from] candle_core::Error),

    #[error(transparent)]
    Core(#[from] newsprobe_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid model configuration: {0}")]
    Config(String),

    #[error("pretrained encoder {0:?} not found locally; point pretrained_id at a directory holding config.json, vocab.txt and model.safetensors, or use builtin:tiny")]
    PretrainedNotFound(String),

    #[error("checkpoint {path} is missing {what}")]
    IncompleteCheckpoint { path: PathBuf, what: String },

    #[error("label map mismatch: checkpoint has {found}, expected {expected}")]
    LabelMap { expected: String, found: String },

    #[error("training diverged at epoch {epoch}, step {step}: loss is {loss}; lower learning_rate or check inputs")]
    Diverged { epoch: usize, step: usize, loss: f64 },

    #[error("no training examples")]
    EmptyTrainSplit,
}

impl ModelError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ModelError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        ModelError::Json {
            path: path.into(),
            source,
        }
    }
}
