//! Layer forward and backward passes.
//!
//! Every op works on whole batches. Per-sample work is mapped in parallel and
//! parameter gradients are summed in sample order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gemm::{gemm_nn, gemm_nt, gemm_tn};
use super::{DcnnError, Real, Tensor};
use crate::math;
use crate::par;

/// Gradients of one layer's weight and bias vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

fn sum_in_order<T: Real>(parts: impl Iterator<Item = Vec<T>>, len: usize) -> Vec<T> {
    let mut acc = vec![T::ZERO; len];
    for p in parts {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    acc
}

/// Uniform in `±√(6 / fan_in)`.
pub fn he_uniform<T: Real, R: Rng>(values: &mut [T], fan_in: usize, rng: &mut R) {
    let bound = math::sqrt(6.0 / fan_in as f64);
    for v in values {
        *v = T::from_f64(rng.random_range(-bound..bound));
    }
}

/// 2-D cross-correlation with zero padding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv2d<T> {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    /// `out_ch × in_ch × kernel × kernel`
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Conv2d<T> {
    pub fn new(in_ch: usize, out_ch: usize, kernel: usize, stride: usize, pad: usize) -> Self {
        Self {
            in_ch,
            out_ch,
            kernel,
            stride,
            pad,
            weight: vec![T::ZERO; out_ch * in_ch * kernel * kernel],
            bias: vec![T::ZERO; out_ch],
        }
    }

    pub fn fan_in(&self) -> usize {
        self.in_ch * self.kernel * self.kernel
    }

    pub fn out_dims(&self, h: usize, w: usize) -> Result<(usize, usize), DcnnError> {
        if self.stride == 0 || self.kernel == 0 {
            return Err(DcnnError::ShapeMismatch(format!("conv stride {} kernel {}", self.stride, self.kernel)));
        }
        if h + 2 * self.pad < self.kernel || w + 2 * self.pad < self.kernel {
            return Err(DcnnError::ShapeMismatch(format!(
                "kernel {} larger than padded input {}×{}",
                self.kernel,
                h + 2 * self.pad,
                w + 2 * self.pad
            )));
        }
        Ok(((h + 2 * self.pad - self.kernel) / self.stride + 1, (w + 2 * self.pad - self.kernel) / self.stride + 1))
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(usize, usize), DcnnError> {
        let [_, c, h, w] = x.shape();
        if c != self.in_ch {
            return Err(DcnnError::ShapeMismatch(format!("conv expects {} channels, got {c}", self.in_ch)));
        }
        self.out_dims(h, w)
    }

    /// Unrolls one sample into `fan_in × (oh·ow)` columns.
    fn im2col(&self, x: &[T], h: usize, w: usize, oh: usize, ow: usize) -> Vec<T> {
        let (k, s, p) = (self.kernel, self.stride, self.pad);
        let cols_n = oh * ow;
        let mut cols = vec![T::ZERO; self.fan_in() * cols_n];
        for ci in 0..self.in_ch {
            let plane = &x[ci * h * w..(ci + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = &mut cols[((ci * k + ky) * k + kx) * cols_n..][..cols_n];
                    for oy in 0..oh {
                        let iy = (oy * s + ky) as isize - p as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                        let dst = &mut row[oy * ow..(oy + 1) * ow];
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let ix = (ox * s + kx) as isize - p as isize;
                            if ix >= 0 && ix < w as isize {
                                *d = src[ix as usize];
                            }
                        }
                    }
                }
            }
        }
        cols
    }

    fn col2im(&self, cols: &[T], h: usize, w: usize, oh: usize, ow: usize) -> Vec<T> {
        let (k, s, p) = (self.kernel, self.stride, self.pad);
        let cols_n = oh * ow;
        let mut x = vec![T::ZERO; self.in_ch * h * w];
        for ci in 0..self.in_ch {
            let plane = &mut x[ci * h * w..(ci + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = &cols[((ci * k + ky) * k + kx) * cols_n..][..cols_n];
                    for oy in 0..oh {
                        let iy = (oy * s + ky) as isize - p as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                        for ox in 0..ow {
                            let ix = (ox * s + kx) as isize - p as isize;
                            if ix >= 0 && ix < w as isize {
                                dst[ix as usize] += row[oy * ow + ox];
                            }
                        }
                    }
                }
            }
        }
        x
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, DcnnError> {
        let (oh, ow) = self.check_input(x)?;
        let [n, _, h, w] = x.shape();
        let p = oh * ow;
        let out = par::map_indices(n, |s| {
            let cols = self.im2col(x.sample(s), h, w, oh, ow);
            let mut y = Vec::with_capacity(self.out_ch * p);
            for &b in &self.bias {
                y.extend(core::iter::repeat(b).take(p));
            }
            gemm_nn(self.out_ch, p, self.fan_in(), &self.weight, &cols, &mut y);
            y
        });
        Ok(Tensor::stack(out, [self.out_ch, oh, ow]))
    }

    /// Returns the input gradient (when `input_grad`) and parameter gradients.
    pub fn backward(
        &self,
        x: &Tensor<T>,
        gy: &Tensor<T>,
        input_grad: bool,
    ) -> Result<(Option<Tensor<T>>, ParamGrad<T>), DcnnError> {
        let (oh, ow) = self.check_input(x)?;
        let [n, _, h, w] = x.shape();
        if gy.shape() != [n, self.out_ch, oh, ow] {
            return Err(DcnnError::ShapeMismatch(format!("conv grad shape {:?}", gy.shape())));
        }
        let (p, fan_in) = (oh * ow, self.fan_in());
        let parts = par::map_indices(n, |s| {
            let cols = self.im2col(x.sample(s), h, w, oh, ow);
            let g = gy.sample(s);
            let mut dw = vec![T::ZERO; self.out_ch * fan_in];
            gemm_nt(self.out_ch, fan_in, p, g, &cols, &mut dw);
            let db: Vec<T> = g.chunks_exact(p).map(|r| r.iter().copied().sum()).collect();
            let dx = input_grad.then(|| {
                let mut dcols = vec![T::ZERO; fan_in * p];
                gemm_tn(fan_in, p, self.out_ch, &self.weight, g, &mut dcols);
                self.col2im(&dcols, h, w, oh, ow)
            });
            (dx, dw, db)
        });
        let mut dxs = Vec::with_capacity(n);
        let mut dws = Vec::with_capacity(n);
        let mut dbs = Vec::with_capacity(n);
        for (dx, dw, db) in parts {
            if let Some(dx) = dx {
                dxs.push(dx);
            }
            dws.push(dw);
            dbs.push(db);
        }
        let grad = ParamGrad {
            weight: sum_in_order(dws.into_iter(), self.weight.len()),
            bias: sum_in_order(dbs.into_iter(), self.out_ch),
        };
        let dx = input_grad.then(|| Tensor::stack(dxs, [self.in_ch, h, w]));
        Ok((dx, grad))
    }
}

pub fn relu_forward<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| {
        if !(*v > T::ZERO) {
            *v = T::ZERO;
        }
    });
    y
}

/// Gradient through ReLU given either its input or its output (the masks
/// agree: both are positive exactly where the input is).
pub fn relu_backward<T: Real>(x_or_y: &Tensor<T>, gy: &Tensor<T>) -> Tensor<T> {
    let mut gx = gy.clone();
    for (g, &v) in gx.data_mut().iter_mut().zip(x_or_y.data()) {
        if !(v > T::ZERO) {
            *g = T::ZERO;
        }
    }
    gx
}

/// Non-overlapping max pooling (stride equals the window).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxPool2d {
    pub size: usize,
}

/// Per-output index of the selected input element within its sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolIndices {
    input_shape: [usize; 4],
    argmax: Vec<u32>,
}

impl MaxPool2d {
    pub fn out_dims(&self, h: usize, w: usize) -> Result<(usize, usize), DcnnError> {
        if self.size == 0 || h % self.size != 0 || w % self.size != 0 || h == 0 || w == 0 {
            return Err(DcnnError::ShapeMismatch(format!("pool window {} does not tile {h}×{w}", self.size)));
        }
        Ok((h / self.size, w / self.size))
    }

    pub fn forward<T: Real>(&self, x: &Tensor<T>) -> Result<(Tensor<T>, PoolIndices), DcnnError> {
        let [n, c, h, w] = x.shape();
        let (oh, ow) = self.out_dims(h, w)?;
        let k = self.size;
        let mut y = Tensor::zeros([n, c, oh, ow]);
        let mut argmax = vec![0u32; n * c * oh * ow];
        let mut o = 0;
        for s in 0..n {
            let xs = x.sample(s);
            for ch in 0..c {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut best = (ch * h + oy * k) * w + ox * k;
                        for dy in 0..k {
                            for dx in 0..k {
                                let i = (ch * h + oy * k + dy) * w + ox * k + dx;
                                if xs[i] > xs[best] {
                                    best = i;
                                }
                            }
                        }
                        y.data_mut()[o] = xs[best];
                        argmax[o] = best as u32;
                        o += 1;
                    }
                }
            }
        }
        Ok((y, PoolIndices { input_shape: x.shape(), argmax }))
    }

    pub fn backward<T: Real>(&self, idx: &PoolIndices, gy: &Tensor<T>) -> Tensor<T> {
        let mut gx = Tensor::zeros(idx.input_shape);
        let per_out = gy.sample_len();
        let per_in = gx.sample_len();
        for (o, (&a, &g)) in idx.argmax.iter().zip(gy.data()).enumerate() {
            let s = o / per_out;
            gx.data_mut()[s * per_in + a as usize] += g;
        }
        gx
    }
}

/// Per-channel batch normalization over (batch, height, width).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm2d<T> {
    pub channels: usize,
    pub eps: f64,
    pub momentum: f64,
    pub affine: bool,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
}

/// Batch statistics kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct BnCache<T> {
    pub xhat: Tensor<T>,
    pub mean: Vec<f64>,
    /// Biased batch variance.
    pub var: Vec<f64>,
    inv_std: Vec<f64>,
    count: usize,
}

impl<T: Real> BatchNorm2d<T> {
    pub fn new(channels: usize, eps: f64, momentum: f64, affine: bool) -> Self {
        Self {
            channels,
            eps,
            momentum,
            affine,
            gamma: vec![T::ONE; channels],
            beta: vec![T::ZERO; channels],
            running_mean: vec![T::ZERO; channels],
            running_var: vec![T::ONE; channels],
        }
    }

    fn check(&self, x: &Tensor<T>) -> Result<(), DcnnError> {
        if x.shape()[1] != self.channels {
            return Err(DcnnError::ShapeMismatch(format!("batchnorm expects {} channels, got {}", self.channels, x.shape()[1])));
        }
        Ok(())
    }

    fn scale_shift(&self, c: usize) -> (f64, f64) {
        if self.affine {
            (self.gamma[c].to_f64(), self.beta[c].to_f64())
        } else {
            (1.0, 0.0)
        }
    }

    pub fn forward_train(&self, x: &Tensor<T>) -> Result<(Tensor<T>, BnCache<T>), DcnnError> {
        self.check(x)?;
        let [n, c, h, w] = x.shape();
        if n < 2 {
            return Err(DcnnError::BatchTooSmall(n));
        }
        let hw = h * w;
        let count = n * hw;
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        for ch in 0..c {
            let plane = |s: usize| &x.sample(s)[ch * hw..(ch + 1) * hw];
            let m = (0..n).map(|s| plane(s).iter().map(|v| v.to_f64()).sum::<f64>()).sum::<f64>() / count as f64;
            let v = (0..n)
                .map(|s| plane(s).iter().map(|v| (v.to_f64() - m) * (v.to_f64() - m)).sum::<f64>())
                .sum::<f64>()
                / count as f64;
            mean[ch] = m;
            var[ch] = v;
        }
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / math::sqrt(v + self.eps)).collect();
        let mut xhat = Tensor::zeros(x.shape());
        let mut y = Tensor::zeros(x.shape());
        for s in 0..n {
            for ch in 0..c {
                let (g, b) = self.scale_shift(ch);
                let src = &x.sample(s)[ch * hw..(ch + 1) * hw];
                let xh = &mut xhat.sample_mut(s)[ch * hw..(ch + 1) * hw];
                for (d, &v) in xh.iter_mut().zip(src) {
                    *d = T::from_f64((v.to_f64() - mean[ch]) * inv_std[ch]);
                }
                let (gt, bt) = (T::from_f64(g), T::from_f64(b));
                let xh = &xhat.sample(s)[ch * hw..(ch + 1) * hw];
                for (d, &v) in y.sample_mut(s)[ch * hw..(ch + 1) * hw].iter_mut().zip(xh) {
                    *d = gt * v + bt;
                }
            }
        }
        Ok((y, BnCache { xhat, mean, var, inv_std, count }))
    }

    pub fn forward_infer(&self, x: &Tensor<T>) -> Result<Tensor<T>, DcnnError> {
        self.check(x)?;
        let [n, c, h, w] = x.shape();
        let hw = h * w;
        let mut y = x.clone();
        for ch in 0..c {
            let (g, b) = self.scale_shift(ch);
            let inv = 1.0 / math::sqrt(self.running_var[ch].to_f64() + self.eps);
            let scale = T::from_f64(g * inv);
            let shift = T::from_f64(b - g * inv * self.running_mean[ch].to_f64());
            for s in 0..n {
                for v in &mut y.sample_mut(s)[ch * hw..(ch + 1) * hw] {
                    *v = scale * *v + shift;
                }
            }
        }
        Ok(y)
    }

    /// Folds batch statistics into the running estimates (unbiased variance).
    pub fn update_running(&mut self, cache: &BnCache<T>) {
        let m = self.momentum;
        let unbias = cache.count as f64 / (cache.count - 1) as f64;
        for c in 0..self.channels {
            self.running_mean[c] = T::from_f64((1.0 - m) * self.running_mean[c].to_f64() + m * cache.mean[c]);
            self.running_var[c] = T::from_f64((1.0 - m) * self.running_var[c].to_f64() + m * cache.var[c] * unbias);
        }
    }

    /// Full gradient, including the paths through the batch mean and variance.
    /// Parameter gradients are zero when the layer is not affine.
    pub fn backward(&self, cache: &BnCache<T>, gy: &Tensor<T>) -> Result<(Tensor<T>, ParamGrad<T>), DcnnError> {
        if gy.shape() != cache.xhat.shape() {
            return Err(DcnnError::ShapeMismatch(format!("batchnorm grad shape {:?}", gy.shape())));
        }
        let [n, c, h, w] = gy.shape();
        let hw = h * w;
        let m = cache.count as f64;
        let mut gx = Tensor::zeros(gy.shape());
        let mut dgamma = vec![T::ZERO; c];
        let mut dbeta = vec![T::ZERO; c];
        for ch in 0..c {
            let mut sum_g = 0.0;
            let mut sum_gx = 0.0;
            for s in 0..n {
                let g = &gy.sample(s)[ch * hw..(ch + 1) * hw];
                let xh = &cache.xhat.sample(s)[ch * hw..(ch + 1) * hw];
                for (&gv, &xv) in g.iter().zip(xh) {
                    sum_g += gv.to_f64();
                    sum_gx += gv.to_f64() * xv.to_f64();
                }
            }
            let (gamma, _) = self.scale_shift(ch);
            let k = gamma * cache.inv_std[ch] / m;
            for s in 0..n {
                let range = ch * hw..(ch + 1) * hw;
                let g = &gy.sample(s)[range.clone()];
                let xh = &cache.xhat.sample(s)[range.clone()];
                let dst = &mut gx.sample_mut(s)[range];
                for ((d, &gv), &xv) in dst.iter_mut().zip(g).zip(xh) {
                    *d = T::from_f64(k * (m * gv.to_f64() - sum_g - xv.to_f64() * sum_gx));
                }
            }
            if self.affine {
                dgamma[ch] = T::from_f64(sum_gx);
                dbeta[ch] = T::from_f64(sum_g);
            }
        }
        Ok((gx, ParamGrad { weight: dgamma, bias: dbeta }))
    }
}

/// Fully connected layer `y = W x + b` on flattened samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `out_dim × in_dim`
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Linear<T> {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        Self { in_dim, out_dim, weight: vec![T::ZERO; in_dim * out_dim], bias: vec![T::ZERO; out_dim] }
    }

    fn check(&self, x: &Tensor<T>) -> Result<(), DcnnError> {
        if x.sample_len() != self.in_dim {
            return Err(DcnnError::ShapeMismatch(format!("linear expects {} inputs, got {}", self.in_dim, x.sample_len())));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, DcnnError> {
        self.check(x)?;
        let n = x.batch();
        let mut y = Vec::with_capacity(n * self.out_dim);
        for _ in 0..n {
            y.extend_from_slice(&self.bias);
        }
        gemm_nt(n, self.out_dim, self.in_dim, x.data(), &self.weight, &mut y);
        Tensor::from_vec([n, self.out_dim, 1, 1], y)
    }

    pub fn backward(&self, x: &Tensor<T>, gy: &Tensor<T>) -> Result<(Tensor<T>, ParamGrad<T>), DcnnError> {
        self.check(x)?;
        let n = x.batch();
        if gy.shape() != [n, self.out_dim, 1, 1] {
            return Err(DcnnError::ShapeMismatch(format!("linear grad shape {:?}", gy.shape())));
        }
        let mut dw = vec![T::ZERO; self.weight.len()];
        gemm_tn(self.out_dim, self.in_dim, n, gy.data(), x.data(), &mut dw);
        let mut db = vec![T::ZERO; self.out_dim];
        for s in 0..n {
            for (d, &g) in db.iter_mut().zip(gy.sample(s)) {
                *d += g;
            }
        }
        let mut dx = vec![T::ZERO; n * self.in_dim];
        gemm_nn(n, self.in_dim, self.out_dim, gy.data(), &self.weight, &mut dx);
        Ok((Tensor::from_vec(x.shape(), dx)?, ParamGrad { weight: dw, bias: db }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput<T> {
    /// Mean cross-entropy over the batch.
    pub loss: f64,
    /// Gradient of `loss` with respect to the logits.
    pub grad: Tensor<T>,
    /// Row-wise softmax of the logits.
    pub probs: Vec<Vec<f64>>,
    pub correct: usize,
}

/// Categorical cross-entropy `−(1/N) Σ ln p_{y}` over a softmax of the
/// logits. With two classes this is the usual binary cross-entropy.
pub fn softmax_cross_entropy<T: Real>(logits: &Tensor<T>, labels: &[usize]) -> Result<LossOutput<T>, DcnnError> {
    let (n, c) = (logits.batch(), logits.sample_len());
    if labels.len() != n {
        return Err(DcnnError::ShapeMismatch(format!("{} labels for batch {n}", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= c) {
        return Err(DcnnError::ShapeMismatch(format!("label {bad} with {c} classes")));
    }
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(n * c);
    let mut probs = Vec::with_capacity(n);
    let mut correct = 0;
    for (s, &y) in labels.iter().enumerate() {
        let mut p: Vec<f64> = logits.sample(s).iter().map(|v| v.to_f64()).collect();
        math::softmax_in_place(&mut p);
        loss -= math::ln(p[y]);
        if math::argmax(&p) == y {
            correct += 1;
        }
        for (k, &pk) in p.iter().enumerate() {
            let t = if k == y { 1.0 } else { 0.0 };
            grad.push(T::from_f64((pk - t) / n as f64));
        }
        probs.push(p);
    }
    Ok(LossOutput { loss: loss / n as f64, grad: Tensor::from_vec(logits.shape(), grad)?, probs, correct })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_all_ones() {
        let mut conv = Conv2d::<f64>::new(1, 1, 2, 1, 0);
        conv.weight.iter_mut().for_each(|w| *w = 1.0);
        conv.bias[0] = 0.5;
        let x = Tensor::from_vec([1, 1, 3, 3], vec![1.0; 9]).unwrap();
        assert_eq!(conv.forward(&x).unwrap().data(), &[4.5; 4]);
    }

    #[test]
    fn conv_identity_kernel() {
        let mut conv = Conv2d::<f64>::new(2, 2, 1, 1, 0);
        conv.weight = vec![1.0, 0.0, 0.0, 1.0];
        let x = Tensor::from_vec([2, 2, 3, 4], (0..48).map(|v| v as f64).collect()).unwrap();
        assert_eq!(conv.forward(&x).unwrap(), x);
    }

    #[test]
    fn conv_output_size() {
        let conv = Conv2d::<f32>::new(3, 64, 7, 2, 3);
        assert_eq!(conv.out_dims(64, 64).unwrap(), (32, 32));
        assert_eq!(conv.out_dims(224, 224).unwrap(), (112, 112));
        assert!(Conv2d::<f32>::new(1, 1, 9, 1, 0).out_dims(4, 4).is_err());
    }

    #[test]
    fn relu_values() {
        let x = Tensor::from_vec([1, 3, 1, 1], vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu_forward(&x).data(), &[0.0, 0.0, 2.0]);
        let g = Tensor::from_vec([1, 3, 1, 1], vec![1.0; 3]).unwrap();
        assert_eq!(relu_backward(&x, &g).data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn pool_max_and_tie_rule() {
        let pool = MaxPool2d { size: 2 };
        let x = Tensor::from_vec([1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(pool.forward(&x).unwrap().0.data(), &[4.0]);

        let x = Tensor::from_vec([1, 1, 4, 4], vec![7.0; 16]).unwrap();
        let (y, idx) = pool.forward(&x).unwrap();
        assert_eq!(y.data(), &[7.0; 4]);
        let g = pool.backward(&idx, &Tensor::from_vec([1, 1, 2, 2], vec![1.0; 4]).unwrap());
        let hot: Vec<usize> = g.data().iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, _)| i).collect();
        assert_eq!(hot, [0, 2, 8, 10]);
    }

    #[test]
    fn batchnorm_two_values() {
        let bn = BatchNorm2d::<f64>::new(1, 1e-5, 0.1, true);
        let x = Tensor::from_vec([2, 1, 1, 1], vec![1.0, 3.0]).unwrap();
        let (y, _) = bn.forward_train(&x).unwrap();
        assert!((y.data()[0] + 1.0).abs() < 1e-5 && (y.data()[1] - 1.0).abs() < 1e-5);
        let one = Tensor::from_vec([1, 1, 1, 1], vec![1.0]).unwrap();
        assert_eq!(bn.forward_train(&one).unwrap_err(), DcnnError::BatchTooSmall(1));
    }

    #[test]
    fn linear_identity_and_zero() {
        let mut fc = Linear::<f64>::new(3, 3);
        fc.weight = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let x = Tensor::from_vec([2, 3, 1, 1], vec![1.0, -2.0, 3.0, 4.0, 5.0, -6.0]).unwrap();
        assert_eq!(fc.forward(&x).unwrap(), x);
        let mut fc = Linear::<f64>::new(3, 2);
        fc.bias = vec![0.25, -1.0];
        assert_eq!(fc.forward(&x).unwrap().data(), &[0.25, -1.0, 0.25, -1.0]);
    }

    #[test]
    fn uniform_logits_loss() {
        let logits = Tensor::<f64>::zeros([3, 5, 1, 1]);
        let out = softmax_cross_entropy(&logits, &[0, 2, 4]).unwrap();
        assert!((out.loss - libm::log(5.0)).abs() < 1e-12);
        assert!(out.probs.iter().flatten().all(|&p| (p - 0.2).abs() < 1e-15));
    }
}
