use num_traits::Float;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Stop once the last `patience` values all fail to beat the best value
/// seen before them. Only a strict improvement counts.
pub fn early_stop_decision<F: Float>(history: &[F], patience: usize) -> StopDecision {
    let patience = patience.max(1);
    if history.len() <= patience {
        return StopDecision::Continue;
    }
    let (before, window) = history.split_at(history.len() - patience);
    let best = before.iter().copied().fold(F::neg_infinity(), F::max);
    if window.iter().all(|&v| !(v > best)) {
        StopDecision::Stop
    } else {
        StopDecision::Continue
    }
}

/// Index of the first maximum; ties resolve to the earliest epoch.
pub fn best_epoch<F: Float>(history: &[F]) -> Option<usize> {
    let mut best: Option<(usize, F)> = None;
    for (i, &v) in history.iter().enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ if v.is_nan() => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
