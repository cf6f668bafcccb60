//! Fine-tuning loop.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use candle_core::Tensor;
use chrono::Utc;
use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use newsprobe_core::dataset::{encode, Encoding, SplitBundle};
use newsprobe_core::evaluation::ClassificationReport;
use newsprobe_core::training::{best_epoch, early_stop_decision, EpochRecord, LinearWarmupSchedule, StopDecision, TrainConfig};

use crate::classifier::{select_device, write_records, CheckpointMeta, Classifier, METRICS_FILE};
use crate::encoder::{batch_tensors, smoothed_ce_sum, Dropout};
use crate::evaluate::evaluate_split;
use crate::optim::{clip_grad_norm, AdamW, AdamWConfig};
use crate::{ModelError, Result};

pub const BEST_DIR: &str = "best";
pub const TRAIN_METRICS_FILE: &str = "train_split_metrics.json";

const DROPOUT_STREAM: u64 = 0xd7_0b0a;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub cleaning_fingerprint: String,
    pub split_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub checkpoint_dir: PathBuf,
    pub checkpoint_fingerprint: String,
    pub optimizer_steps: usize,
    pub planned_steps: usize,
    pub warmup_steps: usize,
    pub stopped_early: bool,
    /// Best checkpoint on the training split.
    pub train_split: ClassificationReport,
    pub seconds: f64,
}

/// Order in which epoch `epoch` (1-based) visits the `n` training examples.
pub fn epoch_order(seed: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(epoch as u64));
    order.shuffle(&mut rng);
    order
}

/// Micro-batches of `order`, grouped into optimizer steps.
pub fn step_groups(order: &[usize], per_device_batch: usize, accum: usize) -> Vec<Vec<&[usize]>> {
    let micro: Vec<&[usize]> = order.chunks(per_device_batch.max(1)).collect();
    micro.chunks(accum.max(1)).map(|g| g.to_vec()).collect()
}

/// Fine-tunes from `config.pretrained_id` and writes the best checkpoint to
/// `out_dir/best` plus the epoch log to `out_dir/metrics.jsonl`.
pub fn train(config: &TrainConfig, splits: &SplitBundle, out_dir: &Path, opts: &TrainOptions) -> Result<TrainOutcome> {
    config.validate()?;
    if splits.train.is_empty() {
        return Err(ModelError::EmptyTrainSplit);
    }
    if config.mixed_precision {
        info!("mixed_precision requested; the cpu backend trains in f32");
    }
    let started = Instant::now();
    fs::create_dir_all(out_dir).map_err(|e| ModelError::io(out_dir, e))?;
    let device = select_device();
    let texts: Vec<&str> = splits.train.iter().map(|e| e.text.as_str()).collect();
    let classifier = Classifier::init(config, &texts, &device)?;

    let encodings: Vec<Encoding> = splits
        .train
        .iter()
        .map(|e| encode(e, &classifier.tokenizer, &classifier.spec))
        .collect();
    let n = encodings.len();
    let planned_steps = config.total_steps(n);
    let schedule = LinearWarmupSchedule::new(planned_steps, config.warmup_ratio, config.learning_rate);
    info!(
        "training on {n} examples: {} steps/epoch, {planned_steps} planned steps, {} warmup",
        config.optimizer_steps_per_epoch(n),
        schedule.warmup_steps
    );

    let mut optimizer = AdamW::new(
        &classifier.params,
        AdamWConfig {
            weight_decay: config.weight_decay,
            ..AdamWConfig::default()
        },
    )?;
    let mut dropout = Dropout::new(config.seed ^ DROPOUT_STREAM);
    let rates = classifier.dropout_rates();
    let encoder = classifier.encoder();
    let vars: Vec<_> = classifier.params.iter().map(|(_, v)| v.clone()).collect();

    let meta_template = CheckpointMeta {
        pretrained_id: config.pretrained_id.clone(),
        best_epoch: 0,
        best_val_f1: f64::NEG_INFINITY,
        weights_sha256: String::new(),
        vocab_fingerprint: String::new(),
        train_config_fingerprint: String::new(),
        cleaning_fingerprint: opts.cleaning_fingerprint.clone(),
        split_fingerprint: opts.split_fingerprint.clone(),
        created_at: Utc::now(),
    };
    let best_dir = out_dir.join(BEST_DIR);
    let mut records: Vec<EpochRecord> = Vec::new();
    let mut f1_history: Vec<f64> = Vec::new();
    let mut best_meta: Option<CheckpointMeta> = None;
    let mut step = 0usize;
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        let order = epoch_order(config.seed, epoch, n);
        let mut loss_sum = 0.0f64;
        for group in step_groups(&order, config.per_device_batch, config.grad_accum_steps) {
            let group_n: usize = group.iter().map(|m| m.len()).sum();
            let mut grads: Vec<Option<Tensor>> = vec![None; vars.len()];
            for micro in group {
                let ids: Vec<&[u32]> = micro.iter().map(|&i| encodings[i].input_ids.as_slice()).collect();
                let masks: Vec<&[u8]> = micro.iter().map(|&i| encodings[i].attention_mask.as_slice()).collect();
                let labels: Vec<u32> = micro
                    .iter()
                    .map(|&i| u32::from(encodings[i].label.expect("training examples are labeled")))
                    .collect();
                let (ids, mask) = batch_tensors(&ids, &masks, &device)?;
                let logits = encoder.logits(&ids, &mask, rates, Some(&mut dropout))?;
                let sum = smoothed_ce_sum(&logits, &labels, config.label_smoothing)?;
                let value = f64::from(sum.to_scalar::<f32>()?);
                if !value.is_finite() {
                    return Err(ModelError::Diverged { epoch, step, loss: value });
                }
                loss_sum += value;
                let store = (sum / group_n as f64)?.backward()?;
                for (slot, var) in grads.iter_mut().zip(&vars) {
                    if let Some(g) = store.get(var.as_tensor()) {
                        *slot = Some(match slot.take() {
                            Some(acc) => (acc + g)?,
                            None => g.clone(),
                        });
                    }
                }
            }
            let mut grads: Vec<Tensor> = grads
                .into_iter()
                .zip(&vars)
                .map(|(g, v)| g.map_or_else(|| v.as_tensor().zeros_like(), Ok))
                .collect::<std::result::Result<_, _>>()?;
            let norm = clip_grad_norm(&mut grads, config.max_grad_norm)?;
            if !norm.is_finite() {
                return Err(ModelError::Diverged { epoch, step, loss: norm });
            }
            optimizer.step(&classifier.params, &grads, schedule.lr_at(step))?;
            step += 1;
        }

        let val = evaluate_split(&classifier, &splits.validation, config.eval_batch_size, config.label_smoothing)?;
        let m = &val.report.metrics;
        let improved = f1_history.iter().all(|&f| m.f1 > f);
        f1_history.push(m.f1);
        records.push(EpochRecord {
            epoch,
            train_loss: loss_sum / n as f64,
            val_loss: val.loss,
            val_accuracy: m.accuracy,
            val_precision: m.precision,
            val_recall: m.recall,
            val_f1: m.f1,
            is_best: false,
        });
        info!(
            "epoch {epoch}: train_loss {:.4} val_loss {:.4} val_f1 {:.4} ({:.0}s)",
            loss_sum / n as f64,
            val.loss,
            m.f1,
            started.elapsed().as_secs_f64()
        );
        if improved {
            let template = CheckpointMeta {
                best_epoch: epoch,
                best_val_f1: m.f1,
                ..meta_template.clone()
            };
            let mut snapshot = records.clone();
            mark_best(&mut snapshot, epoch);
            best_meta = Some(classifier.save(&best_dir, &template, config, &snapshot)?);
        }
        write_records(&out_dir.join(METRICS_FILE), &records)?;
        if early_stop_decision(&f1_history, config.early_stop_patience) == StopDecision::Stop {
            stopped_early = epoch < config.max_epochs;
            info!("early stop after epoch {epoch}");
            break;
        }
    }

    let best = best_epoch(&f1_history).map(|i| i + 1).expect("at least one epoch ran");
    mark_best(&mut records, best);
    write_records(&out_dir.join(METRICS_FILE), &records)?;
    write_records(&best_dir.join(METRICS_FILE), &records)?;
    let meta = best_meta.expect("first epoch always saves");
    debug_assert_eq!(meta.best_epoch, best);

    let best_model = Classifier::load(&best_dir, &device)?;
    let train_split = evaluate_split(
        &best_model.classifier,
        &splits.train,
        config.eval_batch_size,
        config.label_smoothing,
    )?
    .report;
    let path = out_dir.join(TRAIN_METRICS_FILE);
    fs::write(&path, train_split.to_json()).map_err(|e| ModelError::io(&path, e))?;

    Ok(TrainOutcome {
        best_epoch: best,
        best_val_f1: meta.best_val_f1,
        checkpoint_dir: best_dir,
        checkpoint_fingerprint: meta.fingerprint(),
        optimizer_steps: step,
        planned_steps,
        warmup_steps: schedule.warmup_steps,
        stopped_early,
        records,
        train_split,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn mark_best(records: &mut [EpochRecord], best: usize) {
    for r in records {
        r.is_best = r.epoch == best;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_a_seeded_permutation() {
        let a = epoch_order(42, 1, 50);
        assert_eq!(a, epoch_order(42, 1, 50));
        assert_ne!(a, epoch_order(42, 2, 50));
        let mut s = a.clone();
        s.sort();
        assert_eq!(s, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn groups_match_step_count() {
        let cfg = TrainConfig::default();
        for n in [1, 7, 16, 17, 100, 2880] {
            let order: Vec<usize> = (0..n).collect();
            let groups = step_groups(&order, cfg.per_device_batch, cfg.grad_accum_steps);
            assert_eq!(groups.len(), cfg.optimizer_steps_per_epoch(n));
            assert_eq!(groups.iter().flatten().map(|m| m.len()).sum::<usize>(), n);
        }
    }
}
