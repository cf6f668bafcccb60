//! Encoder + head bundle: construction, batched inference and checkpoints.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use candle_core::Device;
use chrono::{DateTime, Utc};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use newsprobe_core::dataset::{encode_text, Encoding, TokenizationSpec, WordPieceTokenizer};
use newsprobe_core::fingerprint::{of_json, sha256_hex};
use newsprobe_core::training::{softmax, EpochRecord, TrainConfig};
use newsprobe_core::OriginLabel;

use crate::config::{EncoderConfig, BUILTIN_PREFIX};
use crate::encoder::{batch_tensors, DropoutRates, Encoder};
use crate::params::Params;
use crate::{ModelError, Result};

pub const WEIGHTS_FILE: &str = "model.safetensors";
pub const CONFIG_FILE: &str = "config.json";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const TOKENIZER_FILE: &str = "tokenizer.json";
pub const LABEL_MAP_FILE: &str = "label_map.json";
pub const TRAIN_CONFIG_FILE: &str = "train_config.json";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const META_FILE: &str = "checkpoint.json";

/// Environment variable naming the compute device.
pub const DEVICE_ENV: &str = "NEWSPROBE_DEVICE";
/// Extra directory searched for pretrained encoders, as `<dir>/<org>/<name>`.
pub const MODEL_DIR_ENV: &str = "NEWSPROBE_MODEL_DIR";

const BUILTIN_VOCAB_SIZE: usize = 30_000;

/// Only the CPU backend is compiled in; other requests fall back with a warning.
pub fn select_device() -> Device {
    match std::env::var(DEVICE_ENV) {
        Ok(v) if !v.is_empty() && !v.eq_ignore_ascii_case("cpu") => {
            warn!("{DEVICE_ENV}={v} is not available in this build; using cpu");
            Device::Cpu
        }
        _ => Device::Cpu,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    pub id2label: BTreeMap<String, OriginLabel>,
    pub label2id: BTreeMap<OriginLabel, usize>,
}

impl LabelMap {
    pub fn standard() -> Self {
        LabelMap {
            id2label: OriginLabel::ALL.iter().map(|l| (l.index().to_string(), *l)).collect(),
            label2id: OriginLabel::ALL.iter().map(|l| (*l, l.index())).collect(),
        }
    }
}

/// Provenance and selection record stored next to the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub pretrained_id: String,
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub weights_sha256: String,
    pub vocab_fingerprint: String,
    pub train_config_fingerprint: String,
    pub cleaning_fingerprint: String,
    pub split_fingerprint: String,
    pub created_at: DateTime<Utc>,
}

impl CheckpointMeta {
    /// Content address of the checkpoint.
    pub fn fingerprint(&self) -> String {
        self.weights_sha256.clone()
    }
}

pub struct Classifier {
    pub encoder_config: EncoderConfig,
    pub params: Params,
    pub tokenizer: WordPieceTokenizer,
    pub spec: TokenizationSpec,
    pub device: Device,
}

pub struct LoadedCheckpoint {
    pub classifier: Classifier,
    pub meta: CheckpointMeta,
    pub train_config: TrainConfig,
    pub records: Vec<EpochRecord>,
    pub dir: PathBuf,
}

/// Where the initial encoder weights come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EncoderSource {
    Builtin(String),
    Directory(PathBuf),
}

/// Resolves `pretrained_id` to a builtin preset or a local directory
/// holding `config.json`, `vocab.txt` and `model.safetensors`.
///
/// Hub-style ids are looked up under `$NEWSPROBE_MODEL_DIR/<id>` and in the
/// Hugging Face cache (`$HF_HOME/hub` or `~/.cache/huggingface/hub`).
pub fn resolve_pretrained(id: &str) -> Result<EncoderSource> {
    if let Some(preset) = id.strip_prefix(BUILTIN_PREFIX) {
        return Ok(EncoderSource::Builtin(preset.to_string()));
    }
    let complete = |d: &Path| d.join(CONFIG_FILE).is_file() && d.join(VOCAB_FILE).is_file() && d.join(WEIGHTS_FILE).is_file();
    let direct = PathBuf::from(id);
    if complete(&direct) {
        return Ok(EncoderSource::Directory(direct));
    }
    if let Ok(root) = std::env::var(MODEL_DIR_ENV) {
        let d = Path::new(&root).join(id);
        if complete(&d) {
            return Ok(EncoderSource::Directory(d));
        }
    }
    let hub = std::env::var("HF_HOME")
        .map(|h| PathBuf::from(h).join("hub"))
        .or_else(|_| std::env::var("HOME").map(|h| PathBuf::from(h).join(".cache/huggingface/hub")));
    if let Ok(hub) = hub {
        let snapshots = hub.join(format!("models--{}", id.replace('/', "--"))).join("snapshots");
        if let Ok(entries) = fs::read_dir(&snapshots) {
            let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
            dirs.sort();
            if let Some(d) = dirs.into_iter().find(|d| complete(d)) {
                return Ok(EncoderSource::Directory(d));
            }
        }
    }
    Err(ModelError::PretrainedNotFound(id.to_string()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| ModelError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ModelError::json(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ModelError::json(path, e))?;
    fs::write(path, text + "\n").map_err(|e| ModelError::io(path, e))
}

impl Classifier {
    /// Starting point for fine-tuning. A builtin preset gets a vocabulary
    /// built from `train_texts`; a directory brings its own.
    pub fn init(train_cfg: &TrainConfig, train_texts: &[&str], device: &Device) -> Result<Self> {
        let source = resolve_pretrained(&train_cfg.pretrained_id)?;
        let (mut encoder_config, params, tokenizer) = match source {
            EncoderSource::Builtin(preset) => {
                let tokenizer = WordPieceTokenizer::build(train_texts.iter().copied(), BUILTIN_VOCAB_SIZE, 1)?;
                let cfg = EncoderConfig::preset(&preset, tokenizer.vocab_size(), train_cfg.max_length.max(2))?;
                let params = Params::init(&cfg, train_cfg.seed, device)?;
                info!(
                    "builtin:{preset} encoder, vocab {}, {} parameters",
                    tokenizer.vocab_size(),
                    params.num_scalars()
                );
                (cfg, params, tokenizer)
            }
            EncoderSource::Directory(dir) => {
                let cfg: EncoderConfig = read_json(&dir.join(CONFIG_FILE))?;
                cfg.validate()?;
                let tokenizer = WordPieceTokenizer::from_vocab_file(dir.join(VOCAB_FILE))?;
                let params = Params::load(&dir.join(WEIGHTS_FILE), &cfg, train_cfg.seed, true, device)?;
                info!("loaded encoder from {}", dir.display());
                (cfg, params, tokenizer)
            }
        };
        encoder_config.hidden_dropout_prob = train_cfg.hidden_dropout;
        encoder_config.attention_probs_dropout_prob = train_cfg.attention_dropout;
        encoder_config.validate()?;
        let max_length = train_cfg.max_length.min(encoder_config.max_position_embeddings);
        if max_length < train_cfg.max_length {
            warn!("max_length {} exceeds the encoder's {max_length} positions; truncating there", train_cfg.max_length);
        }
        let spec = TokenizationSpec::new(train_cfg.pretrained_id.clone(), max_length)?;
        Ok(Classifier {
            encoder_config,
            params,
            tokenizer,
            spec,
            device: device.clone(),
        })
    }

    pub fn encoder(&self) -> Encoder<'_> {
        Encoder {
            cfg: &self.encoder_config,
            params: &self.params,
        }
    }

    pub fn dropout_rates(&self) -> DropoutRates {
        DropoutRates {
            hidden: self.encoder_config.hidden_dropout_prob,
            attention: self.encoder_config.attention_probs_dropout_prob,
        }
    }

    pub fn encode(&self, text: &str) -> Encoding {
        encode_text(text, &self.tokenizer, &self.spec)
    }

    /// Class probabilities in inference mode, indexed by [`OriginLabel::index`].
    ///
    /// Inputs are grouped by length so each batch trims little padding;
    /// results come back in input order and do not depend on `batch_size`
    /// beyond float rounding.
    pub fn predict_proba(&self, encodings: &[Encoding], batch_size: usize) -> Result<Vec<[f64; 2]>> {
        let mut order: Vec<usize> = (0..encodings.len()).collect();
        order.sort_by_key(|&i| (encodings[i].real_tokens(), i));
        let mut out = vec![[0.0; 2]; encodings.len()];
        let encoder = self.encoder();
        for chunk in order.chunks(batch_size.max(1)) {
            let ids: Vec<&[u32]> = chunk.iter().map(|&i| encodings[i].input_ids.as_slice()).collect();
            let masks: Vec<&[u8]> = chunk.iter().map(|&i| encodings[i].attention_mask.as_slice()).collect();
            let (ids, mask) = batch_tensors(&ids, &masks, &self.device)?;
            let logits = encoder.logits(&ids, &mask, self.dropout_rates(), None)?.to_vec2::<f32>()?;
            for (&i, row) in chunk.iter().zip(logits) {
                let p = softmax(&[row[0] as f64, row[1] as f64]);
                out[i] = [p[0], p[1]];
            }
        }
        Ok(out)
    }

    /// Writes a self-describing checkpoint directory atomically: everything
    /// goes to a sibling temp directory that is renamed into place.
    pub fn save(
        &self,
        dir: &Path,
        meta_template: &CheckpointMeta,
        train_cfg: &TrainConfig,
        records: &[EpochRecord],
    ) -> Result<CheckpointMeta> {
        let parent = dir.parent().unwrap_or_else(|| Path::new("."));
        fs::create_dir_all(parent).map_err(|e| ModelError::io(parent, e))?;
        let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or("checkpoint");
        let tmp = parent.join(format!(".{name}.tmp"));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| ModelError::io(&tmp, e))?;
        }
        fs::create_dir_all(&tmp).map_err(|e| ModelError::io(&tmp, e))?;

        let weights = tmp.join(WEIGHTS_FILE);
        self.params.save(&weights)?;
        let bytes = fs::read(&weights).map_err(|e| ModelError::io(&weights, e))?;
        let meta = CheckpointMeta {
            weights_sha256: sha256_hex(&bytes),
            vocab_fingerprint: self.tokenizer.fingerprint(),
            train_config_fingerprint: of_json(train_cfg),
            ..meta_template.clone()
        };
        write_json(&tmp.join(CONFIG_FILE), &self.encoder_config)?;
        self.tokenizer.save(tmp.join(VOCAB_FILE))?;
        write_json(&tmp.join(TOKENIZER_FILE), &self.spec)?;
        write_json(&tmp.join(LABEL_MAP_FILE), &LabelMap::standard())?;
        write_json(&tmp.join(TRAIN_CONFIG_FILE), train_cfg)?;
        write_records(&tmp.join(METRICS_FILE), records)?;
        write_json(&tmp.join(META_FILE), &meta)?;

        let old = parent.join(format!(".{name}.old"));
        if dir.exists() {
            if old.exists() {
                fs::remove_dir_all(&old).map_err(|e| ModelError::io(&old, e))?;
            }
            fs::rename(dir, &old).map_err(|e| ModelError::io(dir, e))?;
        }
        fs::rename(&tmp, dir).map_err(|e| ModelError::io(dir, e))?;
        if old.exists() {
            fs::remove_dir_all(&old).map_err(|e| ModelError::io(&old, e))?;
        }
        Ok(meta)
    }

    pub fn load(dir: &Path, device: &Device) -> Result<LoadedCheckpoint> {
        for f in [WEIGHTS_FILE, CONFIG_FILE, VOCAB_FILE, TOKENIZER_FILE, LABEL_MAP_FILE, META_FILE] {
            if !dir.join(f).is_file() {
                return Err(ModelError::IncompleteCheckpoint {
                    path: dir.to_path_buf(),
                    what: f.to_string(),
                });
            }
        }
        let labels: LabelMap = read_json(&dir.join(LABEL_MAP_FILE))?;
        let expected = LabelMap::standard();
        if labels != expected {
            return Err(ModelError::LabelMap {
                expected: serde_json::to_string(&expected.id2label).unwrap_or_default(),
                found: serde_json::to_string(&labels.id2label).unwrap_or_default(),
            });
        }
        let encoder_config: EncoderConfig = read_json(&dir.join(CONFIG_FILE))?;
        encoder_config.validate()?;
        let meta: CheckpointMeta = read_json(&dir.join(META_FILE))?;
        let weights = dir.join(WEIGHTS_FILE);
        let bytes = fs::read(&weights).map_err(|e| ModelError::io(&weights, e))?;
        if sha256_hex(&bytes) != meta.weights_sha256 {
            return Err(ModelError::Config(format!("{} does not match its recorded digest", weights.display())));
        }
        let params = Params::load(&weights, &encoder_config, 0, false, device)?;
        let tokenizer = WordPieceTokenizer::from_vocab_file(dir.join(VOCAB_FILE))?;
        let spec: TokenizationSpec = read_json(&dir.join(TOKENIZER_FILE))?;
        let train_config: TrainConfig = if dir.join(TRAIN_CONFIG_FILE).is_file() {
            read_json(&dir.join(TRAIN_CONFIG_FILE))?
        } else {
            TrainConfig::default()
        };
        let records = if dir.join(METRICS_FILE).is_file() {
            read_records(&dir.join(METRICS_FILE))?
        } else {
            Vec::new()
        };
        Ok(LoadedCheckpoint {
            classifier: Classifier {
                encoder_config,
                params,
                tokenizer,
                spec,
                device: device.clone(),
            },
            meta,
            train_config,
            records,
            dir: dir.to_path_buf(),
        })
    }
}

pub fn write_records(path: &Path, records: &[EpochRecord]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).map_err(|e| ModelError::json(path, e))?);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| ModelError::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<EpochRecord>> {
    let text = fs::read_to_string(path).map_err(|e| ModelError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| ModelError::json(path, e)))
        .collect()
}
