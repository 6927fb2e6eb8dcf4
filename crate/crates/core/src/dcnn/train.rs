use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::network::{Dcnn, DcnnConfig};
use super::optim::Optimizer;
use super::{DcnnError, Real};
use crate::cwt::ScalogramImage;
use crate::seed::{self, Stream};

/// Images with class indices.
#[derive(Debug, Clone, Copy)]
pub struct LabeledImages<'a> {
    pub images: &'a [ScalogramImage],
    pub labels: &'a [usize],
}

impl<'a> LabeledImages<'a> {
    pub fn new(images: &'a [ScalogramImage], labels: &'a [usize]) -> Self {
        Self { images, labels }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub model: Dcnn<T>,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Error)]
pub enum TrainError<T: core::fmt::Debug> {
    #[error(transparent)]
    Dcnn(#[from] DcnnError),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("{images} images but {labels} labels")]
    LengthMismatch { images: usize, labels: usize },
    #[error("label {0} outside the class range")]
    LabelOutOfRange(usize),
    #[error("training diverged at epoch {epoch}, batch {batch}: {reason}")]
    Diverged {
        epoch: usize,
        batch: usize,
        reason: String,
        /// Parameters at the start of the failing epoch.
        last_good: Box<Dcnn<T>>,
        history: Vec<EpochRecord>,
    },
}

/// Mean of each RGB channel over all pixels of all images, in `[0, 1]`.
pub fn channel_means(images: &[ScalogramImage]) -> [f64; 3] {
    let mut sum = [0.0; 3];
    let mut count = 0usize;
    for img in images {
        for px in img.pixels().chunks_exact(3) {
            for c in 0..3 {
                sum[c] += px[c] as f64;
            }
        }
        count += img.side() * img.side();
    }
    if count == 0 {
        return [0.0; 3];
    }
    sum.map(|s| s / (255.0 * count as f64))
}

/// Splits `order` into batches of `size`; a trailing batch of one sample is
/// folded into the previous batch because batch normalization needs two.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size.max(2)).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() < 2) {
        out.pop();
        let start = (out.len() - 1) * size.max(2);
        let last = out.len() - 1;
        out[last] = &order[start..];
    }
    out
}

/// Mean loss and accuracy of a frozen model.
pub fn evaluate<T: Real>(model: &Dcnn<T>, data: LabeledImages<'_>) -> Result<(f64, f64), DcnnError> {
    let refs: Vec<&ScalogramImage> = data.images.iter().collect();
    let probs = model.predict_proba(&refs)?;
    let mut loss = 0.0;
    let mut correct = 0;
    for (p, &y) in probs.iter().zip(data.labels) {
        loss -= crate::math::ln(p[y].max(f64::MIN_POSITIVE));
        if crate::math::argmax(p) == y {
            correct += 1;
        }
    }
    let n = data.len().max(1) as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Mini-batch training with a seeded shuffle per epoch.
///
/// `on_epoch` sees each epoch's record as soon as it is complete.
pub fn train<T: Real>(
    data: LabeledImages<'_>,
    validation: Option<LabeledImages<'_>>,
    n_classes: usize,
    config: &DcnnConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome<T>, TrainError<T>> {
    if data.images.len() != data.labels.len() {
        return Err(TrainError::LengthMismatch { images: data.images.len(), labels: data.labels.len() });
    }
    if data.len() < 2 {
        return Err(TrainError::EmptyDataset);
    }
    if let Some(&bad) = data.labels.iter().find(|&&y| y >= n_classes) {
        return Err(TrainError::LabelOutOfRange(bad));
    }
    let mut counts = alloc::vec![0usize; n_classes];
    data.labels.iter().for_each(|&y| counts[y] += 1);
    for (c, &k) in counts.iter().enumerate() {
        if k < 10 {
            log::warn!("class {c} has only {k} training images");
        }
    }

    let mut model = Dcnn::<T>::new(config.clone(), n_classes, channel_means(data.images))?;
    let mut opt = Optimizer::new(config.optimizer);
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..config.epochs {
        let last_good = model.clone();
        let lr_scale = config.lr_scale(epoch);
        order.sort_unstable();
        order.shuffle(&mut seed::rng(seed::derive(config.seed, epoch as u64), Stream::Shuffle));
        let (mut loss_sum, mut correct, mut seen) = (0.0, 0usize, 0usize);
        for (b, batch) in batches(&order, config.batch_size).into_iter().enumerate() {
            let imgs: Vec<&ScalogramImage> = batch.iter().map(|&i| &data.images[i]).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
            let x = model.input_tensor(&imgs)?;
            match model.train_step(&mut opt, x, &labels, lr_scale) {
                Ok(s) => {
                    loss_sum += s.loss * s.samples as f64;
                    correct += s.correct;
                    seen += s.samples;
                }
                Err(DcnnError::NonFinite(what)) => {
                    return Err(TrainError::Diverged {
                        epoch: epoch + 1,
                        batch: b,
                        reason: alloc::format!("non-finite {what}"),
                        last_good: Box::new(last_good),
                        history,
                    });
                }
                Err(e) => return Err(e.into()),
            }
        }
        let (val_loss, val_acc) = match validation {
            Some(v) if !v.is_empty() => {
                let (l, a) = evaluate(&model, v)?;
                (Some(l), Some(a))
            }
            _ => (None, None),
        };
        let record = EpochRecord {
            epoch: epoch + 1,
            lr: config.optimizer.lr() * lr_scale,
            train_loss: loss_sum / seen as f64,
            train_acc: correct as f64 / seen as f64,
            val_loss,
            val_acc,
        };
        log::info!(
            "epoch {} loss {:.4} acc {:.4}{}",
            record.epoch,
            record.train_loss,
            record.train_acc,
            record.val_acc.map(|a| alloc::format!(" val_acc {a:.4}")).unwrap_or_default()
        );
        on_epoch(&record);
        history.push(record);
    }
    Ok(TrainOutcome { model, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trailing_single_sample_is_folded() {
        let order: Vec<usize> = (0..9).collect();
        let b = batches(&order, 4);
        assert_eq!(b.iter().map(|x| x.len()).collect::<Vec<_>>(), [4, 5]);
        let b = batches(&order[..8], 4);
        assert_eq!(b.iter().map(|x| x.len()).collect::<Vec<_>>(), [4, 4]);
    }

    #[test]
    fn means_of_constant_images() {
        let imgs = [ScalogramImage::filled(4, [255, 0, 51])];
        let m = channel_means(&imgs);
        assert!((m[0] - 1.0).abs() < 1e-12 && m[1] == 0.0 && (m[2] - 0.2).abs() < 1e-12);
    }
}
