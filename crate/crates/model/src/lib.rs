//! BERT-style encoder with a two-class head on top of candle.
//!
//! Parameter names follow the Hugging Face `BertForSequenceClassification`
//! layout, so a local BERT checkpoint (`config.json`, `vocab.txt`,
//! `model.safetensors`) can be fine-tuned directly. Without one, the
//! `builtin:tiny` preset gives a small randomly initialized encoder with a
//! vocabulary built from the training split.
//!
//! All randomness (initialization, dropout masks, data order) is drawn from
//! seeded ChaCha streams.

pub mod classifier;
pub mod config;
pub mod encoder;
pub mod error;
pub mod evaluate;
pub mod optim;
pub mod params;
pub mod train;

pub use classifier::{select_device, CheckpointMeta, Classifier, LoadedCheckpoint};
pub use config::EncoderConfig;
pub use error::{ModelError, Result};
pub use evaluate::{evaluate_split, predict_batch, SplitEvaluation};
pub use train::{train, TrainOptions, TrainOutcome};
