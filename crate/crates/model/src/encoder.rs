//! BERT forward pass over a [`Params`] store.

use candle_core::{DType, Device, Tensor, D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::EncoderConfig;
use crate::params::{Params, CLASSIFIER_BIAS, CLASSIFIER_WEIGHT, ENCODER_PREFIX};
use crate::Result;

/// Probabilities below this are clamped before the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Inverted dropout with masks drawn from a seeded stream.
#[derive(Debug, Clone)]
pub struct Dropout {
    rng: ChaCha8Rng,
}

impl Dropout {
    pub fn new(seed: u64) -> Self {
        Dropout {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn apply(&mut self, x: &Tensor, p: f64) -> Result<Tensor> {
        if p <= 0.0 {
            return Ok(x.clone());
        }
        let keep = (1.0 / (1.0 - p)) as f32;
        let mask: Vec<f32> = (0..x.elem_count())
            .map(|_| if self.rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let mask = Tensor::from_vec(mask, x.shape(), x.device())?;
        Ok(x.mul(&mask)?)
    }
}

/// Dropout probabilities in effect for a forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutRates {
    pub hidden: f64,
    pub attention: f64,
}

fn maybe_drop(x: &Tensor, p: f64, dropout: &mut Option<&mut Dropout>) -> Result<Tensor> {
    match dropout {
        Some(d) => d.apply(x, p),
        None => Ok(x.clone()),
    }
}

fn linear(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    Ok(x.broadcast_matmul(&w.t()?)?.broadcast_add(b)?)
}

/// LayerNorm over the last dimension, built from differentiable primitives.
pub fn layer_norm(x: &Tensor, w: &Tensor, b: &Tensor, eps: f64) -> Result<Tensor> {
    let mean = x.mean_keepdim(D::Minus1)?;
    let centered = x.broadcast_sub(&mean)?;
    let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
    let normed = centered.broadcast_div(&(var + eps)?.sqrt()?)?;
    Ok(normed.broadcast_mul(w)?.broadcast_add(b)?)
}

fn activation(x: &Tensor, act: &str) -> Result<Tensor> {
    Ok(match act {
        "gelu_new" => x.gelu()?,
        "relu" => x.relu()?,
        _ => x.gelu_erf()?,
    })
}

pub struct Encoder<'a> {
    pub cfg: &'a EncoderConfig,
    pub params: &'a Params,
}

impl Encoder<'_> {
    fn p(&self, name: &str) -> &Tensor {
        self.params.get(&format!("{ENCODER_PREFIX}{name}"))
    }

    /// Pooled `[CLS]` representation, `[batch, hidden]`.
    ///
    /// `input_ids` is `[batch, len]` u32, `attention_mask` `[batch, len]` f32
    /// with 1 for real tokens. Passing `dropout` switches to training mode.
    pub fn pooled(
        &self,
        input_ids: &Tensor,
        attention_mask: &Tensor,
        rates: DropoutRates,
        mut dropout: Option<&mut Dropout>,
    ) -> Result<Tensor> {
        let cfg = self.cfg;
        let (batch, len) = input_ids.dims2()?;
        let h = cfg.hidden_size;
        let heads = cfg.num_attention_heads;
        let dh = cfg.head_dim();

        let words = self
            .p("embeddings.word_embeddings.weight")
            .index_select(&input_ids.flatten_all()?, 0)?
            .reshape((batch, len, h))?;
        let positions = self.p("embeddings.position_embeddings.weight").narrow(0, 0, len)?;
        let token_type = self.p("embeddings.token_type_embeddings.weight").narrow(0, 0, 1)?;
        let x = words.broadcast_add(&positions)?.broadcast_add(&token_type)?;
        let x = layer_norm(
            &x,
            self.p("embeddings.LayerNorm.weight"),
            self.p("embeddings.LayerNorm.bias"),
            cfg.layer_norm_eps,
        )?;
        let mut x = maybe_drop(&x, rates.hidden, &mut dropout)?;

        // additive mask: 0 for real tokens, -10000 for padding
        let mask_bias = ((attention_mask.to_dtype(DType::F32)? - 1.0)? * 10000.0)?.reshape((batch, 1, 1, len))?;
        let scale = 1.0 / (dh as f64).sqrt();

        for i in 0..cfg.num_hidden_layers {
            let l = |s: &str| self.p(&format!("encoder.layer.{i}.{s}"));
            let split = |t: Tensor| -> Result<Tensor> {
                Ok(t.reshape((batch, len, heads, dh))?.transpose(1, 2)?.contiguous()?)
            };
            let q = split(linear(&x, l("attention.self.query.weight"), l("attention.self.query.bias"))?)?;
            let k = split(linear(&x, l("attention.self.key.weight"), l("attention.self.key.bias"))?)?;
            let v = split(linear(&x, l("attention.self.value.weight"), l("attention.self.value.bias"))?)?;
            let scores = (q.matmul(&k.t()?.contiguous()?)? * scale)?.broadcast_add(&mask_bias)?;
            let probs = candle_nn::ops::softmax(&scores, D::Minus1)?;
            let probs = maybe_drop(&probs, rates.attention, &mut dropout)?;
            let ctx = probs
                .matmul(&v)?
                .transpose(1, 2)?
                .contiguous()?
                .reshape((batch, len, h))?;
            let attn = linear(&ctx, l("attention.output.dense.weight"), l("attention.output.dense.bias"))?;
            let attn = maybe_drop(&attn, rates.hidden, &mut dropout)?;
            let x1 = layer_norm(
                &(attn + &x)?,
                l("attention.output.LayerNorm.weight"),
                l("attention.output.LayerNorm.bias"),
                cfg.layer_norm_eps,
            )?;
            let inter = activation(
                &linear(&x1, l("intermediate.dense.weight"), l("intermediate.dense.bias"))?,
                &cfg.hidden_act,
            )?;
            let out = linear(&inter, l("output.dense.weight"), l("output.dense.bias"))?;
            let out = maybe_drop(&out, rates.hidden, &mut dropout)?;
            x = layer_norm(
                &(out + x1)?,
                l("output.LayerNorm.weight"),
                l("output.LayerNorm.bias"),
                cfg.layer_norm_eps,
            )?;
        }

        let cls = x.narrow(1, 0, 1)?.squeeze(1)?;
        let pooled = linear(&cls, self.p("pooler.dense.weight"), self.p("pooler.dense.bias"))?.tanh()?;
        maybe_drop(&pooled, rates.hidden, &mut dropout)
    }

    /// Class logits `[batch, 2]`.
    pub fn logits(
        &self,
        input_ids: &Tensor,
        attention_mask: &Tensor,
        rates: DropoutRates,
        dropout: Option<&mut Dropout>,
    ) -> Result<Tensor> {
        let pooled = self.pooled(input_ids, attention_mask, rates, dropout)?;
        head_logits(&pooled, self.params.get(CLASSIFIER_WEIGHT), self.params.get(CLASSIFIER_BIAS))
    }
}

/// `pooled · Wᵀ + b`.
pub fn head_logits(pooled: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    linear(pooled, weight, bias)
}

/// Summed (not averaged) label-smoothed cross-entropy of `logits` against
/// integer `labels`: `−Σ_i Σ_k t_ik · ln max(p_ik, 1e-12)`.
pub fn smoothed_ce_sum(logits: &Tensor, labels: &[u32], alpha: f64) -> Result<Tensor> {
    let (batch, classes) = logits.dims2()?;
    let off = alpha / classes as f64;
    let on = 1.0 - (classes as f64 - 1.0) * off;
    let mut targets = vec![off as f32; batch * classes];
    for (i, &y) in labels.iter().enumerate() {
        targets[i * classes + y as usize] = on as f32;
    }
    let targets = Tensor::from_vec(targets, (batch, classes), logits.device())?;
    let log_probs = candle_nn::ops::log_softmax(logits, D::Minus1)?.maximum(PROB_FLOOR.ln())?;
    Ok((targets * log_probs)?.sum_all()?.neg()?)
}

/// Batch tensors for encodings trimmed to the longest real sequence.
pub fn batch_tensors(
    ids: &[&[u32]],
    masks: &[&[u8]],
    device: &Device,
) -> Result<(Tensor, Tensor)> {
    let width = masks
        .iter()
        .map(|m| m.iter().rposition(|&x| x == 1).map_or(1, |p| p + 1))
        .max()
        .unwrap_or(1);
    let mut flat_ids = Vec::with_capacity(ids.len() * width);
    let mut flat_mask = Vec::with_capacity(ids.len() * width);
    for (row, mask) in ids.iter().zip(masks) {
        flat_ids.extend_from_slice(&row[..width]);
        flat_mask.extend(mask[..width].iter().map(|&m| m as f32));
    }
    let n = ids.len();
    Ok((
        Tensor::from_vec(flat_ids, (n, width), device)?,
        Tensor::from_vec(flat_mask, (n, width), device)?,
    ))
}
