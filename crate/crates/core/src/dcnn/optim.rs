use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::Real;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerConfig {
    Sgd { lr: f64, momentum: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl Default for OptimizerConfig {
    /// At 0.01 the flattened 4096-wide FC input takes steps large enough to
    /// silence every ReLU within the first epoch.
    fn default() -> Self {
        OptimizerConfig::Sgd { lr: 0.001, momentum: 0.9 }
    }
}

impl OptimizerConfig {
    pub fn lr(&self) -> f64 {
        match *self {
            OptimizerConfig::Sgd { lr, .. } | OptimizerConfig::Adam { lr, .. } => lr,
        }
    }

    pub fn adam(lr: f64) -> Self {
        OptimizerConfig::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Optimizer state for a fixed list of parameter vectors.
#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    config: OptimizerConfig,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
    steps: u64,
}

impl<T: Real> Optimizer<T> {
    pub fn new(config: OptimizerConfig) -> Self {
        Self { config, first: Vec::new(), second: Vec::new(), steps: 0 }
    }

    /// One update with the learning rate scaled by `lr_scale`.
    ///
    /// SGD: `v ← μv + g`, `p ← p − lr·v`. Adam uses bias-corrected moments.
    pub fn step(&mut self, params: Vec<&mut Vec<T>>, grads: &[Vec<T>], lr_scale: f64) {
        if self.first.is_empty() {
            self.first = grads.iter().map(|g| vec![T::ZERO; g.len()]).collect();
            if matches!(self.config, OptimizerConfig::Adam { .. }) {
                self.second = self.first.clone();
            }
        }
        self.steps += 1;
        match self.config {
            OptimizerConfig::Sgd { lr, momentum } => {
                let (lr, mu) = (T::from_f64(lr * lr_scale), T::from_f64(momentum));
                for ((p, g), v) in params.into_iter().zip(grads).zip(&mut self.first) {
                    for ((pi, &gi), vi) in p.iter_mut().zip(g).zip(v.iter_mut()) {
                        *vi = mu * *vi + gi;
                        *pi -= lr * *vi;
                    }
                }
            }
            OptimizerConfig::Adam { lr, beta1, beta2, eps } => {
                let t = self.steps as f64;
                let c1 = 1.0 - math::pow(beta1, t);
                let c2 = 1.0 - math::pow(beta2, t);
                let step = T::from_f64(lr * lr_scale * math::sqrt(c2) / c1);
                let (b1, b2, e) = (T::from_f64(beta1), T::from_f64(beta2), T::from_f64(eps * math::sqrt(c2)));
                let (one_b1, one_b2) = (T::ONE - b1, T::ONE - b2);
                for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.first).zip(&mut self.second) {
                    for (((pi, &gi), mi), vi) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *mi = b1 * *mi + one_b1 * gi;
                        *vi = b2 * *vi + one_b2 * gi * gi;
                        *pi -= step * *mi / (vi.sqrt() + e);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_minimizes_quadratic() {
        let mut p = [vec![5.0f64, -3.0]];
        let mut opt = Optimizer::new(OptimizerConfig::Sgd { lr: 0.1, momentum: 0.9 });
        for _ in 0..300 {
            let g = vec![p[0].iter().map(|v| 2.0 * v).collect::<Vec<_>>()];
            opt.step(p.iter_mut().collect(), &g, 1.0);
        }
        assert!(p[0].iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let mut p = [vec![1.0f64]];
        let mut opt = Optimizer::new(OptimizerConfig::adam(0.01));
        opt.step(p.iter_mut().collect(), &[vec![123.0]], 1.0);
        assert!((p[0][0] - 0.99).abs() < 1e-6);
    }
}
