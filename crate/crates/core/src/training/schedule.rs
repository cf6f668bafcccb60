use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Linear warmup from zero to `base_lr`, then linear decay to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearWarmupSchedule<F> {
    pub total_steps: usize,
    pub warmup_steps: usize,
    pub base_lr: F,
}

impl<F: Float> LinearWarmupSchedule<F> {
    /// `warmup_steps = round(warmup_ratio · total_steps)`.
    pub fn new(total_steps: usize, warmup_ratio: f64, base_lr: F) -> Self {
        let warmup_steps = ((warmup_ratio * total_steps as f64).round() as usize).min(total_steps);
        LinearWarmupSchedule {
            total_steps,
            warmup_steps,
            base_lr,
        }
    }

    /// Learning rate at `step`; steps past the end clamp to zero.
    pub fn lr_at(&self, step: usize) -> F {
        let f = |n: usize| F::from(n).unwrap();
        let step = step.min(self.total_steps);
        if step <= self.warmup_steps && self.warmup_steps > 0 {
            self.base_lr * f(step) / f(self.warmup_steps)
        } else if self.total_steps == self.warmup_steps {
            F::zero()
        } else {
            self.base_lr * f(self.total_steps - step) / f(self.total_steps - self.warmup_steps)
        }
    }
}

pub fn lr_at<F: Float>(step: usize, total_steps: usize, warmup_ratio: f64, base_lr: F) -> F {
    LinearWarmupSchedule::new(total_steps, warmup_ratio, base_lr).lr_at(step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        let s = LinearWarmupSchedule::new(1080, 0.1, 2e-5f64);
        assert_eq!(s.warmup_steps, 108);
        assert_eq!(s.lr_at(0), 0.0);
        assert_eq!(s.lr_at(108), 2e-5);
        assert_eq!(s.lr_at(1080), 0.0);
    }

    #[test]
    fn decay_midpoint() {
        let s = LinearWarmupSchedule::new(1080, 0.1, 2e-5f64);
        // (108 + 1080) / 2 = 594
        assert!((s.lr_at(594) - 1e-5).abs() < 1e-20);
        assert!((s.lr_at(54) - 1e-5).abs() < 1e-20);
    }

    #[test]
    fn peak_at_boundary() {
        let s = LinearWarmupSchedule::new(200, 0.1, 1.0f64);
        let peak = (0..=200).map(|i| s.lr_at(i)).fold(f64::MIN, f64::max);
        assert_eq!(peak, s.lr_at(s.warmup_steps));
        assert!(s.lr_at(s.warmup_steps - 1) < peak && s.lr_at(s.warmup_steps + 1) < peak);
    }

    #[test]
    fn no_warmup() {
        let s = LinearWarmupSchedule::new(10, 0.0, 1.0f64);
        assert_eq!(s.lr_at(0), 1.0);
        assert_eq!(s.lr_at(5), 0.5);
    }
}
