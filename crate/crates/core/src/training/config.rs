use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_PRETRAINED_ID: &str = "dbmdz/bert-base-turkish-cased";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    LinearWithWarmup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EarlyStopMetric {
    ValF1,
}

/// Fine-tuning hyperparameters. Defaults reproduce the reference setup:
/// AdamW at 2e-5 with 0.01 decay, linear schedule with 10% warmup, clip
/// 1.0, 6 epochs, batch 8 × 2 accumulation steps, dropout 0.2, label
/// smoothing 0.1, patience 2 on validation F1, seed 42.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Local encoder directory, a hub id mirrored locally, or `builtin:<preset>`.
    pub pretrained_id: String,
    pub max_length: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub scheduler: SchedulerKind,
    pub warmup_ratio: f64,
    pub max_grad_norm: f64,
    pub max_epochs: usize,
    pub per_device_batch: usize,
    pub grad_accum_steps: usize,
    pub hidden_dropout: f64,
    pub attention_dropout: f64,
    pub label_smoothing: f64,
    pub early_stop_patience: usize,
    pub early_stop_metric: EarlyStopMetric,
    pub mixed_precision: bool,
    pub seed: u64,
    pub eval_batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            pretrained_id: DEFAULT_PRETRAINED_ID.into(),
            max_length: 512,
            learning_rate: 2e-5,
            weight_decay: 0.01,
            scheduler: SchedulerKind::LinearWithWarmup,
            warmup_ratio: 0.1,
            max_grad_norm: 1.0,
            max_epochs: 6,
            per_device_batch: 8,
            grad_accum_steps: 2,
            hidden_dropout: 0.2,
            attention_dropout: 0.2,
            label_smoothing: 0.1,
            early_stop_patience: 2,
            early_stop_metric: EarlyStopMetric::ValF1,
            mixed_precision: false,
            seed: 42,
            eval_batch_size: 32,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.warmup_ratio > 0.0 && self.warmup_ratio < 1.0) {
            return bad(format!("warmup_ratio {} must lie in (0, 1)", self.warmup_ratio));
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return bad(format!("label_smoothing {} must lie in [0, 1)", self.label_smoothing));
        }
        for (name, p) in [("hidden_dropout", self.hidden_dropout), ("attention_dropout", self.attention_dropout)] {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("{name} {p} must lie in [0, 1)"));
            }
        }
        if !(self.learning_rate > 0.0) || !(self.max_grad_norm > 0.0) || self.weight_decay < 0.0 {
            return bad("learning_rate and max_grad_norm must be positive, weight_decay non-negative".into());
        }
        if self.per_device_batch == 0 || self.grad_accum_steps == 0 || self.eval_batch_size == 0 {
            return bad("batch sizes and grad_accum_steps must be at least 1".into());
        }
        if self.max_epochs == 0 || self.early_stop_patience == 0 {
            return bad("max_epochs and early_stop_patience must be at least 1".into());
        }
        if self.max_length < 2 {
            return bad(format!("max_length {} is too small", self.max_length));
        }
        Ok(())
    }

    pub fn effective_batch(&self) -> usize {
        self.per_device_batch * self.grad_accum_steps
    }

    /// One optimizer step consumes `grad_accum_steps` micro-batches; a short
    /// final group still triggers a step.
    pub fn optimizer_steps_per_epoch(&self, n_train: usize) -> usize {
        n_train
            .div_ceil(self.per_device_batch)
            .div_ceil(self.grad_accum_steps)
    }

    pub fn total_steps(&self, n_train: usize) -> usize {
        self.optimizer_steps_per_epoch(n_train) * self.max_epochs
    }
}

/// Telemetry for one finished epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub val_precision: f64,
    pub val_recall: f64,
    pub val_f1: f64,
    pub is_best: bool,
}
