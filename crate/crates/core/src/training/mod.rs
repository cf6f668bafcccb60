//! Training-side math that is independent of the encoder backend.

mod config;
mod early_stop;
mod head;
mod loss;
mod schedule;

pub use config::{EarlyStopMetric, EpochRecord, SchedulerKind, TrainConfig, DEFAULT_PRETRAINED_ID};
pub use early_stop::{best_epoch, early_stop_decision, StopDecision};
pub use head::{head_forward, softmax, ClassifierHead};
pub use loss::{
    entropy, head_loss_gradient, mean_smoothed_cross_entropy, smooth_targets, smoothed_cross_entropy,
    HeadGradient, PROB_FLOOR,
};
pub use schedule::{lr_at, LinearWarmupSchedule};
