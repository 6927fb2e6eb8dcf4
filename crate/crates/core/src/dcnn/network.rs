use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::layers::{
    he_uniform, relu_backward, relu_forward, softmax_cross_entropy, BatchNorm2d, BnCache, Conv2d, Linear, LossOutput,
    MaxPool2d, ParamGrad, PoolIndices,
};
use super::optim::{Optimizer, OptimizerConfig};
use super::{DcnnError, Real, Tensor};
use crate::cwt::ScalogramImage;
use crate::seed::{self, Stream};

/// How the skip branch (output of the first pool) rejoins the main branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkipMode {
    Add,
    Concat,
}

/// Architecture and training settings. Stored inside every saved model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DcnnConfig {
    pub input_side: usize,
    pub filters: usize,
    pub fc_widths: [usize; 2],
    pub skip: SkipMode,
    pub bn_affine: bool,
    pub bn_eps: f64,
    pub bn_momentum: f64,
    pub optimizer: OptimizerConfig,
    /// Epochs (0-based) at which the learning rate is multiplied by `lr_decay`.
    pub lr_decay_epochs: Vec<usize>,
    pub lr_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for DcnnConfig {
    fn default() -> Self {
        Self {
            input_side: 64,
            filters: 64,
            fc_widths: [256, 64],
            skip: SkipMode::Add,
            bn_affine: true,
            bn_eps: 1e-5,
            bn_momentum: 0.1,
            optimizer: OptimizerConfig::default(),
            lr_decay_epochs: vec![20],
            lr_decay: 0.1,
            batch_size: 32,
            epochs: 30,
            seed: 0,
        }
    }
}

impl DcnnConfig {
    pub fn lr_scale(&self, epoch: usize) -> f64 {
        self.lr_decay_epochs.iter().filter(|&&e| epoch >= e).fold(1.0, |s, _| s * self.lr_decay)
    }

    /// Spatial side after the stem (strided conv then pool) and after the
    /// second pool, plus the flattened width fed to the first FC layer.
    pub fn shape_plan(&self) -> Result<(usize, usize, usize), DcnnError> {
        if self.filters == 0 || self.fc_widths.contains(&0) {
            return Err(DcnnError::InvalidConfig("layer widths must be positive"));
        }
        let stem = Conv2d::<f32>::new(3, self.filters, 7, 2, 3);
        let (h, _) = stem.out_dims(self.input_side, self.input_side)?;
        let pool = MaxPool2d { size: 2 };
        let (h, _) = pool.out_dims(h, h)?;
        let (h2, _) = pool.out_dims(h, h)?;
        let merged = match self.skip {
            SkipMode::Add => self.filters,
            SkipMode::Concat => 2 * self.filters,
        };
        Ok((h, h2, merged * h2 * h2))
    }

    pub fn flattened_dim(&self) -> Result<usize, DcnnError> {
        Ok(self.shape_plan()?.2)
    }
}

/// The CNN: a strided 7×7 stem, two 3×3 conv blocks with a skip connection
/// around them, and three fully connected layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dcnn<T> {
    pub config: DcnnConfig,
    pub n_classes: usize,
    /// Per-channel mean of the training images, subtracted from every input.
    pub input_mean: [f64; 3],
    pub conv1: Conv2d<T>,
    pub bn1: BatchNorm2d<T>,
    pub conv2: Conv2d<T>,
    pub bn2: BatchNorm2d<T>,
    pub conv3: Conv2d<T>,
    pub bn3: BatchNorm2d<T>,
    pub fc1: Linear<T>,
    pub fc2: Linear<T>,
    pub fc3: Linear<T>,
}

const POOL: MaxPool2d = MaxPool2d { size: 2 };

/// Activations kept from a training-mode forward pass.
pub struct Trace<T> {
    x: Tensor<T>,
    bn1: BnCache<T>,
    r1: Tensor<T>,
    i1: PoolIndices,
    p1: Tensor<T>,
    bn2: BnCache<T>,
    r2: Tensor<T>,
    bn3: BnCache<T>,
    r3: Tensor<T>,
    i2: PoolIndices,
    z: Tensor<T>,
    g1: Tensor<T>,
    g2: Tensor<T>,
    pool2_shape: [usize; 4],
}

/// Loss, per-tensor parameter gradients in [`Dcnn::params`] order, and the
/// forward trace.
pub type BatchGradients<T> = (LossOutput<T>, Vec<Vec<T>>, Trace<T>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub correct: usize,
    pub samples: usize,
}

fn merge<T: Real>(main: &Tensor<T>, skip: &Tensor<T>, mode: SkipMode) -> Tensor<T> {
    match mode {
        SkipMode::Add => {
            let mut s = main.clone();
            for (a, &b) in s.data_mut().iter_mut().zip(skip.data()) {
                *a += b;
            }
            s
        }
        SkipMode::Concat => {
            let [n, c, h, w] = main.shape();
            let per = (0..n)
                .map(|i| {
                    let mut v = main.sample(i).to_vec();
                    v.extend_from_slice(skip.sample(i));
                    v
                })
                .collect();
            Tensor::stack(per, [2 * c, h, w])
        }
    }
}

/// Splits the merged gradient back into (main, skip) parts.
fn unmerge<T: Real>(g: Tensor<T>, mode: SkipMode) -> (Tensor<T>, Tensor<T>) {
    match mode {
        SkipMode::Add => (g.clone(), g),
        SkipMode::Concat => {
            let [n, c2, h, w] = g.shape();
            let half = c2 / 2 * h * w;
            let main = (0..n).map(|i| g.sample(i)[..half].to_vec()).collect();
            let skip = (0..n).map(|i| g.sample(i)[half..].to_vec()).collect();
            (Tensor::stack(main, [c2 / 2, h, w]), Tensor::stack(skip, [c2 / 2, h, w]))
        }
    }
}

impl<T: Real> Dcnn<T> {
    /// A freshly He-initialized network.
    pub fn new(config: DcnnConfig, n_classes: usize, input_mean: [f64; 3]) -> Result<Self, DcnnError> {
        if n_classes < 2 {
            return Err(DcnnError::InvalidConfig("need at least two classes"));
        }
        let flat = config.flattened_dim()?;
        let f = config.filters;
        let bn = |c| BatchNorm2d::new(c, config.bn_eps, config.bn_momentum, config.bn_affine);
        let [w1, w2] = config.fc_widths;
        let mut net = Self {
            n_classes,
            input_mean,
            conv1: Conv2d::new(3, f, 7, 2, 3),
            bn1: bn(f),
            conv2: Conv2d::new(f, f, 3, 1, 1),
            bn2: bn(f),
            conv3: Conv2d::new(f, f, 3, 1, 1),
            bn3: bn(f),
            fc1: Linear::new(flat, w1),
            fc2: Linear::new(w1, w2),
            fc3: Linear::new(w2, n_classes),
            config,
        };
        let seed = net.config.seed;
        let mut layer = 0u64;
        let mut init = |w: &mut [T], fan_in: usize| {
            layer += 1;
            he_uniform(w, fan_in, &mut seed::rng(seed::derive(seed, layer), Stream::Init));
        };
        for conv in [&mut net.conv1, &mut net.conv2, &mut net.conv3] {
            let fan = conv.fan_in();
            init(&mut conv.weight, fan);
        }
        for fc in [&mut net.fc1, &mut net.fc2, &mut net.fc3] {
            let fan = fc.in_dim;
            init(&mut fc.weight, fan);
        }
        Ok(net)
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Trainable parameter vectors in a fixed order.
    pub fn params(&self) -> Vec<&Vec<T>> {
        vec![
            &self.conv1.weight,
            &self.conv1.bias,
            &self.bn1.gamma,
            &self.bn1.beta,
            &self.conv2.weight,
            &self.conv2.bias,
            &self.bn2.gamma,
            &self.bn2.beta,
            &self.conv3.weight,
            &self.conv3.bias,
            &self.bn3.gamma,
            &self.bn3.beta,
            &self.fc1.weight,
            &self.fc1.bias,
            &self.fc2.weight,
            &self.fc2.bias,
            &self.fc3.weight,
            &self.fc3.bias,
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<T>> {
        vec![
            &mut self.conv1.weight,
            &mut self.conv1.bias,
            &mut self.bn1.gamma,
            &mut self.bn1.beta,
            &mut self.conv2.weight,
            &mut self.conv2.bias,
            &mut self.bn2.gamma,
            &mut self.bn2.beta,
            &mut self.conv3.weight,
            &mut self.conv3.bias,
            &mut self.bn3.gamma,
            &mut self.bn3.beta,
            &mut self.fc1.weight,
            &mut self.fc1.bias,
            &mut self.fc2.weight,
            &mut self.fc2.bias,
            &mut self.fc3.weight,
            &mut self.fc3.bias,
        ]
    }

    /// Mean-subtracted planar input batch.
    pub fn input_tensor(&self, images: &[&ScalogramImage]) -> Result<Tensor<T>, DcnnError> {
        let side = self.config.input_side;
        let n = side * side;
        let mut data = Vec::with_capacity(images.len() * 3 * n);
        for img in images {
            if img.side() != side {
                return Err(DcnnError::ShapeMismatch(format!("image side {} but network expects {side}", img.side())));
            }
            let planar = img.to_planar();
            for c in 0..3 {
                data.extend(planar[c * n..(c + 1) * n].iter().map(|&v| T::from_f64(v - self.input_mean[c])));
            }
        }
        Tensor::from_vec([images.len(), 3, side, side], data)
    }

    fn forward(&self, x: Tensor<T>, train: bool) -> Result<(Tensor<T>, Option<Trace<T>>), DcnnError> {
        let bn = |layer: &BatchNorm2d<T>, a: &Tensor<T>| -> Result<(Tensor<T>, Option<BnCache<T>>), DcnnError> {
            if train {
                let (y, c) = layer.forward_train(a)?;
                Ok((y, Some(c)))
            } else {
                Ok((layer.forward_infer(a)?, None))
            }
        };
        let (b1, c1) = bn(&self.bn1, &self.conv1.forward(&x)?)?;
        let r1 = relu_forward(&b1);
        drop(b1);
        let (p1, i1) = POOL.forward(&r1)?;
        let (b2, c2) = bn(&self.bn2, &self.conv2.forward(&p1)?)?;
        let r2 = relu_forward(&b2);
        drop(b2);
        let (b3, c3) = bn(&self.bn3, &self.conv3.forward(&r2)?)?;
        let r3 = relu_forward(&b3);
        drop(b3);
        let s = merge(&r3, &p1, self.config.skip);
        let (p2, i2) = POOL.forward(&s)?;
        drop(s);
        let pool2_shape = p2.shape();
        let z = p2.flatten();
        let g1 = relu_forward(&self.fc1.forward(&z)?);
        let g2 = relu_forward(&self.fc2.forward(&g1)?);
        let logits = self.fc3.forward(&g2)?;
        let trace = match (c1, c2, c3) {
            (Some(bn1), Some(bn2), Some(bn3)) => {
                Some(Trace { x, bn1, r1, i1, p1, bn2, r2, bn3, r3, i2, z, g1, g2, pool2_shape })
            }
            _ => None,
        };
        Ok((logits, trace))
    }

    /// Inference-mode logits. Pure: batch composition does not affect any
    /// sample's result.
    pub fn logits(&self, x: Tensor<T>) -> Result<Tensor<T>, DcnnError> {
        Ok(self.forward(x, false)?.0)
    }

    /// Training-mode logits (batch statistics) and the trace for `backward`.
    pub fn forward_train(&self, x: Tensor<T>) -> Result<(Tensor<T>, Trace<T>), DcnnError> {
        let (logits, trace) = self.forward(x, true)?;
        Ok((logits, trace.expect("train mode keeps a trace")))
    }

    /// Parameter gradients in `params()` order.
    pub fn backward(&self, t: &Trace<T>, grad_logits: &Tensor<T>) -> Result<Vec<Vec<T>>, DcnnError> {
        let (dg2, gfc3) = self.fc3.backward(&t.g2, grad_logits)?;
        let (dg1, gfc2) = self.fc2.backward(&t.g1, &relu_backward(&t.g2, &dg2))?;
        let (dz, gfc1) = self.fc1.backward(&t.z, &relu_backward(&t.g1, &dg1))?;
        let ds = POOL.backward(&t.i2, &dz.reshape(t.pool2_shape)?);
        let (dr3, dskip) = unmerge(ds, self.config.skip);
        let (da3, gbn3) = self.bn3.backward(&t.bn3, &relu_backward(&t.r3, &dr3))?;
        let (dr2, gc3) = self.conv3.backward(&t.r2, &da3, true)?;
        let (da2, gbn2) = self.bn2.backward(&t.bn2, &relu_backward(&t.r2, &dr2.expect("input grad")))?;
        let (dp1, gc2) = self.conv2.backward(&t.p1, &da2, true)?;
        let mut dp1 = dp1.expect("input grad");
        for (a, &b) in dp1.data_mut().iter_mut().zip(dskip.data()) {
            *a += b;
        }
        let dr1 = POOL.backward(&t.i1, &dp1);
        let (da1, gbn1) = self.bn1.backward(&t.bn1, &relu_backward(&t.r1, &dr1))?;
        let (_, gc1) = self.conv1.backward(&t.x, &da1, false)?;
        let mut out = Vec::with_capacity(18);
        for g in [gc1, gbn1, gc2, gbn2, gc3, gbn3, gfc1, gfc2, gfc3] {
            let ParamGrad { weight, bias } = g;
            out.push(weight);
            out.push(bias);
        }
        Ok(out)
    }

    pub fn update_running_stats(&mut self, t: &Trace<T>) {
        self.bn1.update_running(&t.bn1);
        self.bn2.update_running(&t.bn2);
        self.bn3.update_running(&t.bn3);
    }

    /// Loss and parameter gradients on one batch, without updating anything.
    pub fn loss_and_grads(&self, x: Tensor<T>, labels: &[usize]) -> Result<BatchGradients<T>, DcnnError> {
        let (logits, trace) = self.forward_train(x)?;
        if !logits.all_finite() {
            return Err(DcnnError::NonFinite("logits"));
        }
        let out = softmax_cross_entropy(&logits, labels)?;
        let grads = self.backward(&trace, &out.grad)?;
        Ok((out, grads, trace))
    }

    /// One optimizer step on a batch. Fails without touching the parameters
    /// if the loss or any gradient is not finite.
    pub fn train_step(
        &mut self,
        opt: &mut Optimizer<T>,
        x: Tensor<T>,
        labels: &[usize],
        lr_scale: f64,
    ) -> Result<StepStats, DcnnError> {
        let (out, grads, trace) = self.loss_and_grads(x, labels)?;
        if !out.loss.is_finite() {
            return Err(DcnnError::NonFinite("loss"));
        }
        if grads.iter().flatten().any(|g| !g.is_finite()) {
            return Err(DcnnError::NonFinite("gradient"));
        }
        opt.step(self.params_mut(), &grads, lr_scale);
        self.update_running_stats(&trace);
        Ok(StepStats { loss: out.loss, correct: out.correct, samples: labels.len() })
    }

    /// Class probabilities for each image, evaluated in chunks.
    pub fn predict_proba(&self, images: &[&ScalogramImage]) -> Result<Vec<Vec<f64>>, DcnnError> {
        let mut out = Vec::with_capacity(images.len());
        for chunk in images.chunks(64) {
            let logits = self.logits(self.input_tensor(chunk)?)?;
            for s in 0..chunk.len() {
                let mut p: Vec<f64> = logits.sample(s).iter().map(|v| v.to_f64()).collect();
                crate::math::softmax_in_place(&mut p);
                out.push(p);
            }
        }
        Ok(out)
    }

    pub fn predict(&self, image: &ScalogramImage) -> Result<usize, DcnnError> {
        Ok(crate::math::argmax(&self.predict_proba(&[image])?[0]))
    }
}
