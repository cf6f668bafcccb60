//! Named parameter store using Hugging Face BERT tensor names.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use candle_core::{DType, Device, Tensor, Var};
use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::EncoderConfig;
use crate::{ModelError, Result};

pub const ENCODER_PREFIX: &str = "bert.";
pub const CLASSIFIER_WEIGHT: &str = "classifier.weight";
pub const CLASSIFIER_BIAS: &str = "classifier.bias";
pub const NUM_LABELS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Init {
    Normal,
    Zeros,
    Ones,
}

/// Every parameter of encoder + pooler + head, with its shape.
pub fn parameter_shapes(cfg: &EncoderConfig) -> Vec<(String, Vec<usize>)> {
    let h = cfg.hidden_size;
    let mut out: Vec<(String, Vec<usize>)> = Vec::new();
    let mut push = |name: String, shape: Vec<usize>| out.push((name, shape));
    let e = |s: &str| format!("{ENCODER_PREFIX}embeddings.{s}");
    push(e("word_embeddings.weight"), vec![cfg.vocab_size, h]);
    push(e("position_embeddings.weight"), vec![cfg.max_position_embeddings, h]);
    push(e("token_type_embeddings.weight"), vec![cfg.type_vocab_size, h]);
    push(e("LayerNorm.weight"), vec![h]);
    push(e("LayerNorm.bias"), vec![h]);
    for i in 0..cfg.num_hidden_layers {
        let l = |s: &str| format!("{ENCODER_PREFIX}encoder.layer.{i}.{s}");
        for proj in ["query", "key", "value"] {
            push(l(&format!("attention.self.{proj}.weight")), vec![h, h]);
            push(l(&format!("attention.self.{proj}.bias")), vec![h]);
        }
        push(l("attention.output.dense.weight"), vec![h, h]);
        push(l("attention.output.dense.bias"), vec![h]);
        push(l("attention.output.LayerNorm.weight"), vec![h]);
        push(l("attention.output.LayerNorm.bias"), vec![h]);
        push(l("intermediate.dense.weight"), vec![cfg.intermediate_size, h]);
        push(l("intermediate.dense.bias"), vec![cfg.intermediate_size]);
        push(l("output.dense.weight"), vec![h, cfg.intermediate_size]);
        push(l("output.dense.bias"), vec![h]);
        push(l("output.LayerNorm.weight"), vec![h]);
        push(l("output.LayerNorm.bias"), vec![h]);
    }
    push(format!("{ENCODER_PREFIX}pooler.dense.weight"), vec![h, h]);
    push(format!("{ENCODER_PREFIX}pooler.dense.bias"), vec![h]);
    push(CLASSIFIER_WEIGHT.into(), vec![NUM_LABELS, h]);
    push(CLASSIFIER_BIAS.into(), vec![NUM_LABELS]);
    out
}

fn init_kind(name: &str) -> Init {
    if name.contains("LayerNorm") {
        if name.ends_with("weight") {
            Init::Ones
        } else {
            Init::Zeros
        }
    } else if name.ends_with("bias") {
        Init::Zeros
    } else {
        Init::Normal
    }
}

/// Decoupled weight decay skips biases and LayerNorm parameters.
pub fn decays(name: &str) -> bool {
    !(name.ends_with("bias") || name.contains("LayerNorm"))
}

fn init_tensor(shape: &[usize], kind: Init, std: f64, rng: &mut ChaCha8Rng, device: &Device) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    let t = match kind {
        Init::Zeros => Tensor::zeros(shape, DType::F32, device)?,
        Init::Ones => Tensor::ones(shape, DType::F32, device)?,
        Init::Normal => {
            let dist = Normal::new(0.0f32, std as f32).map_err(|e| ModelError::Config(format!("init std {std}: {e}")))?;
            let data: Vec<f32> = (0..n).map(|_| dist.sample(rng)).collect();
            Tensor::from_vec(data, shape, device)?
        }
    };
    Ok(t)
}

#[derive(Debug, Clone)]
pub struct Params {
    vars: BTreeMap<String, Var>,
    order: Vec<String>,
}

impl Params {
    /// Random initialization; every draw comes from `seed`.
    pub fn init(cfg: &EncoderConfig, seed: u64, device: &Device) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vars = BTreeMap::new();
        let mut order = Vec::new();
        for (name, shape) in parameter_shapes(cfg) {
            let t = init_tensor(&shape, init_kind(&name), cfg.initializer_range, &mut rng, device)?;
            vars.insert(name.clone(), Var::from_tensor(&t)?);
            order.push(name);
        }
        Ok(Params { vars, order })
    }

    /// Loads a safetensors file written by this crate or by Hugging Face.
    ///
    /// Accepts names with or without the `bert.` prefix and the legacy
    /// `gamma`/`beta` LayerNorm names. A missing classifier head (and, when
    /// `allow_fresh_head` is set, a missing pooler) is initialized from
    /// `seed`; any other missing tensor is an error.
    pub fn load(path: &Path, cfg: &EncoderConfig, seed: u64, allow_fresh_head: bool, device: &Device) -> Result<Self> {
        let mut stored: HashMap<String, Tensor> = candle_core::safetensors::load(path, device)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vars = BTreeMap::new();
        let mut order = Vec::new();
        let mut fresh = Vec::new();
        for (name, shape) in parameter_shapes(cfg) {
            let found = candidates(&name).into_iter().find_map(|c| stored.remove(&c));
            let tensor = match found {
                Some(t) => {
                    if t.dims() != shape.as_slice() {
                        return Err(ModelError::Config(format!(
                            "{name}: stored shape {:?}, expected {shape:?}",
                            t.dims()
                        )));
                    }
                    t.to_dtype(DType::F32)?
                }
                None => {
                    let head = name.starts_with("classifier.");
                    let pooler = name.contains("pooler.");
                    if !(head || (pooler && allow_fresh_head)) {
                        return Err(ModelError::IncompleteCheckpoint {
                            path: path.to_path_buf(),
                            what: name,
                        });
                    }
                    fresh.push(name.clone());
                    init_tensor(&shape, init_kind(&name), cfg.initializer_range, &mut rng, device)?
                }
            };
            vars.insert(name.clone(), Var::from_tensor(&tensor)?);
            order.push(name);
        }
        if !fresh.is_empty() {
            warn!("initialized fresh parameters: {}", fresh.join(", "));
        }
        if !stored.is_empty() {
            let mut unused: Vec<_> = stored.keys().cloned().collect();
            unused.sort();
            debug!("ignored {} stored tensors (e.g. {})", unused.len(), unused[0]);
        }
        Ok(Params { vars, order })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let map: HashMap<String, Tensor> = self
            .vars
            .iter()
            .map(|(k, v)| (k.clone(), v.as_tensor().clone()))
            .collect();
        candle_core::safetensors::save(&map, path)?;
        Ok(())
    }

    /// Tensor for `name`; panics on an unknown name, which is a programming error.
    pub fn get(&self, name: &str) -> &Tensor {
        self.vars
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
            .as_tensor()
    }

    pub fn var(&self, name: &str) -> &Var {
        &self.vars[name]
    }

    /// Parameters in definition order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Var)> {
        self.order.iter().map(|n| (n.as_str(), &self.vars[n]))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.vars.values().map(|v| v.elem_count()).sum()
    }

    /// Deep copy whose tensors no longer alias this store.
    pub fn snapshot(&self) -> Result<Self> {
        let mut vars = BTreeMap::new();
        for (k, v) in &self.vars {
            vars.insert(k.clone(), Var::from_tensor(&v.as_tensor().copy()?)?);
        }
        Ok(Params {
            vars,
            order: self.order.clone(),
        })
    }
}

fn candidates(name: &str) -> Vec<String> {
    let bare = name.strip_prefix(ENCODER_PREFIX).unwrap_or(name);
    let mut out = vec![name.to_string()];
    if bare != name {
        out.push(bare.to_string());
    }
    if name.contains("LayerNorm.") {
        for base in [name, bare] {
            out.push(base.replace("LayerNorm.weight", "LayerNorm.gamma").replace("LayerNorm.bias", "LayerNorm.beta"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded() {
        let cfg = EncoderConfig::preset("tiny", 50, 32).unwrap();
        let a = Params::init(&cfg, 7, &Device::Cpu).unwrap();
        let b = Params::init(&cfg, 7, &Device::Cpu).unwrap();
        let c = Params::init(&cfg, 8, &Device::Cpu).unwrap();
        let w = |p: &Params| p.get(CLASSIFIER_WEIGHT).flatten_all().unwrap().to_vec1::<f32>().unwrap();
        assert_eq!(w(&a), w(&b));
        assert_ne!(w(&a), w(&c));
        let ln = a.get("bert.embeddings.LayerNorm.weight").to_vec1::<f32>().unwrap();
        assert!(ln.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn decay_groups() {
        assert!(decays("bert.encoder.layer.0.attention.self.query.weight"));
        assert!(!decays("bert.encoder.layer.0.attention.self.query.bias"));
        assert!(!decays("bert.embeddings.LayerNorm.weight"));
        assert!(decays(CLASSIFIER_WEIGHT));
    }

    #[test]
    fn save_load_roundtrip_and_legacy_names() {
        let cfg = EncoderConfig::preset("tiny", 20, 16).unwrap();
        let p = Params::init(&cfg, 1, &Device::Cpu).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.safetensors");
        p.save(&path).unwrap();
        let q = Params::load(&path, &cfg, 99, false, &Device::Cpu).unwrap();
        for (name, v) in p.iter() {
            let a = v.as_tensor().flatten_all().unwrap().to_vec1::<f32>().unwrap();
            let b = q.get(name).flatten_all().unwrap().to_vec1::<f32>().unwrap();
            assert_eq!(a, b, "{name}");
        }

        // Hugging Face style: no prefix, gamma/beta, no head
        let mut hf = HashMap::new();
        for (name, v) in p.iter() {
            if name.starts_with("classifier") {
                continue;
            }
            let bare = name.strip_prefix(ENCODER_PREFIX).unwrap();
            let bare = bare.replace("LayerNorm.weight", "LayerNorm.gamma").replace("LayerNorm.bias", "LayerNorm.beta");
            hf.insert(bare, v.as_tensor().clone());
        }
        let hf_path = dir.path().join("hf.safetensors");
        candle_core::safetensors::save(&hf, &hf_path).unwrap();
        let r = Params::load(&hf_path, &cfg, 3, false, &Device::Cpu).unwrap();
        assert_eq!(r.len(), p.len());
        let name = "bert.encoder.layer.1.output.LayerNorm.weight";
        assert_eq!(
            r.get(name).to_vec1::<f32>().unwrap(),
            p.get(name).to_vec1::<f32>().unwrap()
        );
    }

    #[test]
    fn missing_encoder_tensor_is_an_error() {
        let cfg = EncoderConfig::preset("tiny", 20, 16).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.safetensors");
        let mut m = HashMap::new();
        m.insert("unrelated".to_string(), Tensor::zeros(2, DType::F32, &Device::Cpu).unwrap());
        candle_core::safetensors::save(&m, &path).unwrap();
        assert!(matches!(
            Params::load(&path, &cfg, 0, true, &Device::Cpu),
            Err(ModelError::IncompleteCheckpoint { .. })
        ));
    }
}
