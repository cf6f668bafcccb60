//! AdamW with decoupled weight decay and global-norm gradient clipping.

use candle_core::Tensor;

use crate::params::{decays, Params};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

pub struct AdamW {
    cfg: AdamWConfig,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    decay: Vec<bool>,
    step: usize,
}

impl AdamW {
    pub fn new(params: &Params, cfg: AdamWConfig) -> Result<Self> {
        let mut m = Vec::with_capacity(params.len());
        let mut v = Vec::with_capacity(params.len());
        let mut decay = Vec::with_capacity(params.len());
        for (name, var) in params.iter() {
            m.push(var.as_tensor().zeros_like()?);
            v.push(var.as_tensor().zeros_like()?);
            decay.push(decays(name));
        }
        Ok(AdamW { cfg, m, v, decay, step: 0 })
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// One update; `grads` aligns with `params.iter()`.
    ///
    /// `p ← p − lr·wd·p − lr·m̂ / (√v̂ + ε)`, decay only on decaying groups.
    pub fn step(&mut self, params: &Params, grads: &[Tensor], lr: f64) -> Result<()> {
        self.step += 1;
        let AdamWConfig { beta1, beta2, eps, weight_decay } = self.cfg;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (i, ((_, var), g)) in params.iter().zip(grads).enumerate() {
            let m = ((&self.m[i] * beta1)? + (g * (1.0 - beta1))?)?;
            let v = ((&self.v[i] * beta2)? + (g.sqr()? * (1.0 - beta2))?)?;
            let m_hat = (&m / bc1)?;
            let v_hat = (&v / bc2)?;
            let update = m_hat.div(&(v_hat.sqrt()? + eps)?)?;
            let mut p = var.as_tensor().clone();
            if self.decay[i] && weight_decay > 0.0 {
                p = (p * (1.0 - lr * weight_decay))?;
            }
            var.set(&(p - (update * lr)?)?)?;
            self.m[i] = m;
            self.v[i] = v;
        }
        Ok(())
    }
}

/// Global L2 norm of `grads`.
pub fn global_norm(grads: &[Tensor]) -> Result<f64> {
    let mut total = 0.0f64;
    for g in grads {
        total += g.sqr()?.sum_all()?.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?;
    }
    Ok(total.sqrt())
}

/// Rescales `grads` in place so their global norm is at most `max_norm`;
/// returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [Tensor], max_norm: f64) -> Result<f64> {
    let norm = global_norm(grads)?;
    if norm > max_norm {
        let scale = max_norm / (norm + 1e-6);
        for g in grads.iter_mut() {
            *g = (&*g * scale)?;
        }
    }
    Ok(norm)
}

#[cfg(test)]
mod tests {
    use candle_core::Device;

    use super::*;
    use crate::config::EncoderConfig;

    #[test]
    fn clipping() {
        let mut g = vec![
            Tensor::new(&[3f32], &Device::Cpu).unwrap(),
            Tensor::new(&[4f32], &Device::Cpu).unwrap(),
        ];
        let n = clip_grad_norm(&mut g, 1.0).unwrap();
        assert!((n - 5.0).abs() < 1e-6);
        assert!((global_norm(&g).unwrap() - 1.0).abs() < 1e-5);
        let n = clip_grad_norm(&mut g, 10.0).unwrap();
        assert!((n - 1.0).abs() < 1e-5);
    }

    #[test]
    fn first_step_matches_closed_form() {
        // after one step m̂ = g and v̂ = g², so the update is lr·g/(|g|+ε)
        let cfg = EncoderConfig::preset("tiny", 10, 8).unwrap();
        let params = Params::init(&cfg, 0, &Device::Cpu).unwrap();
        let before: Vec<Vec<f32>> = params
            .iter()
            .map(|(_, v)| v.as_tensor().flatten_all().unwrap().to_vec1().unwrap())
            .collect();
        let grads: Vec<Tensor> = params
            .iter()
            .map(|(_, v)| (v.as_tensor().ones_like().unwrap() * 0.5).unwrap())
            .collect();
        let mut opt = AdamW::new(&params, AdamWConfig::default()).unwrap();
        let lr = 1e-3;
        opt.step(&params, &grads, lr).unwrap();
        for ((name, v), old) in params.iter().zip(&before) {
            let new: Vec<f32> = v.as_tensor().flatten_all().unwrap().to_vec1().unwrap();
            let wd = if decays(name) { 0.01 } else { 0.0 };
            for (a, b) in old.iter().zip(&new) {
                let expected = *a as f64 * (1.0 - lr * wd) - lr * 0.5 / (0.5 + 1e-8);
                assert!((*b as f64 - expected).abs() < 1e-6, "{name}");
            }
        }
        assert_eq!(opt.steps_taken(), 1);
    }
}
