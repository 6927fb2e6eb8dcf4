use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use serde::{Deserialize, Serialize};

use super::{Classifier, FeatureSet, MlError};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NbParams {
    /// Variance floor as a fraction of the largest per-feature variance.
    pub var_smoothing: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        Self { var_smoothing: 1e-9 }
    }
}

/// Gaussian naive Bayes with per-class, per-feature mean and variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    n_classes: usize,
    dim: usize,
    log_prior: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
    epsilon: f64,
}

impl GaussianNb {
    pub fn fit(data: &FeatureSet, params: &NbParams) -> Result<Self, MlError> {
        data.require_nonempty()?;
        let (c, d, n) = (data.n_classes(), data.dim(), data.len());
        let counts = data.class_counts();
        if let Some((class, &count)) = counts.iter().enumerate().find(|(_, &k)| k < 2) {
            return Err(MlError::TooFewSamples { class, count, needed: 2 });
        }
        let mut means = vec![0.0; c * d];
        for i in 0..n {
            let y = data.label(i);
            for (m, &x) in means[y * d..(y + 1) * d].iter_mut().zip(data.row(i)) {
                *m += x;
            }
        }
        for y in 0..c {
            means[y * d..(y + 1) * d].iter_mut().for_each(|m| *m /= counts[y] as f64);
        }
        let mut variances = vec![0.0; c * d];
        for i in 0..n {
            let y = data.label(i);
            let mu = &means[y * d..(y + 1) * d];
            for ((v, &x), &m) in variances[y * d..(y + 1) * d].iter_mut().zip(data.row(i)).zip(mu) {
                *v += (x - m) * (x - m);
            }
        }
        for y in 0..c {
            variances[y * d..(y + 1) * d].iter_mut().for_each(|v| *v /= counts[y] as f64);
        }

        // Floor relative to the largest variance of any feature over all data.
        let mut global_mean = vec![0.0; d];
        for i in 0..n {
            for (g, &x) in global_mean.iter_mut().zip(data.row(i)) {
                *g += x / n as f64;
            }
        }
        let mut global_var = vec![0.0; d];
        for i in 0..n {
            for ((g, &x), &m) in global_var.iter_mut().zip(data.row(i)).zip(&global_mean) {
                *g += (x - m) * (x - m) / n as f64;
            }
        }
        let max_var = global_var.iter().copied().fold(0.0, f64::max);
        let epsilon = if max_var > 0.0 { params.var_smoothing * max_var } else { params.var_smoothing };
        variances.iter_mut().for_each(|v| *v += epsilon);

        let log_prior = counts.iter().map(|&k| math::ln(k as f64 / n as f64)).collect();
        Ok(Self { n_classes: c, dim: d, log_prior, means, variances, epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mean(&self, class: usize) -> &[f64] {
        &self.means[class * self.dim..(class + 1) * self.dim]
    }

    pub fn variance(&self, class: usize) -> &[f64] {
        &self.variances[class * self.dim..(class + 1) * self.dim]
    }

    pub fn prior(&self, class: usize) -> f64 {
        math::exp(self.log_prior[class])
    }

    /// `log P(c) + Σ_j log N(x_j; μ_cj, σ²_cj)` for each class.
    pub fn joint_log_likelihood(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| {
                let ll: f64 = self
                    .mean(c)
                    .iter()
                    .zip(self.variance(c))
                    .zip(x)
                    .map(|((&m, &v), &xi)| -0.5 * (math::ln(2.0 * PI * v) + (xi - m) * (xi - m) / v))
                    .sum();
                self.log_prior[c] + ll
            })
            .collect()
    }
}

impl Classifier for GaussianNb {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut p = self.joint_log_likelihood(x);
        math::softmax_in_place(&mut p);
        p
    }

    fn predict(&self, x: &[f64]) -> usize {
        math::argmax(&self.joint_log_likelihood(x))
    }
}
