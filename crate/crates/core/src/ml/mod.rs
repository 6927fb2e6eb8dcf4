//! Classical classifiers over scalogram feature vectors.
//!
//! The feature vector of an image is its luminance (mean of RGB), box-filtered
//! down to 32 × 32 and flattened, with values in `[0, 1]`.

mod forest;
mod knn;
mod nb;
mod svm;

pub use forest::{best_split, gini, DecisionTree, ForestParams, Node, RandomForest, SplitCandidate};
pub use knn::{Knn, KnnParams};
pub use nb::{GaussianNb, NbParams};
pub use svm::{solve_binary, BinarySvm, Kernel, SmoSolution, Svm, SvmParams};

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cwt::ScalogramImage;
use crate::math;

/// Side of the downsampled luminance grid.
pub const FEATURE_SIDE: usize = 32;
pub const FEATURE_LEN: usize = FEATURE_SIDE * FEATURE_SIDE;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("class {class} has {count} samples, need at least {needed}")]
    TooFewSamples { class: usize, count: usize, needed: usize },
    #[error("feature length {got} does not match {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("label {0} outside the class range")]
    LabelOutOfRange(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("non-finite feature value at sample {0}")]
    NonFinite(usize),
}

/// Fixed-width feature rows with class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    dim: usize,
    n_classes: usize,
    values: Vec<f64>,
    labels: Vec<usize>,
}

impl FeatureSet {
    pub fn new(dim: usize, n_classes: usize) -> Self {
        Self { dim, n_classes, values: Vec::new(), labels: Vec::new() }
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<Self, MlError> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut set = Self::new(dim, n_classes);
        for (r, &y) in rows.iter().zip(labels) {
            set.push(r, y)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, row: &[f64], label: usize) -> Result<(), MlError> {
        if row.len() != self.dim {
            return Err(MlError::DimensionMismatch { got: row.len(), expected: self.dim });
        }
        if label >= self.n_classes {
            return Err(MlError::LabelOutOfRange(label));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(MlError::NonFinite(self.labels.len()));
        }
        self.values.extend_from_slice(row);
        self.labels.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &y in &self.labels {
            c[y] += 1;
        }
        c
    }

    /// A copy with rows reordered so that new row `i` is old row `order[i]`.
    pub fn reordered(&self, order: &[usize]) -> Self {
        let mut out = Self::new(self.dim, self.n_classes);
        for &i in order {
            out.values.extend_from_slice(self.row(i));
            out.labels.push(self.labels[i]);
        }
        out
    }

    fn require_nonempty(&self) -> Result<(), MlError> {
        if self.is_empty() {
            Err(MlError::EmptyTrainingSet)
        } else {
            Ok(())
        }
    }
}

/// Overlap weights mapping `src` cells onto `dst` equal-width bins.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let lo = o as f64 * ratio;
            let hi = lo + ratio;
            let first = math::floor(lo) as usize;
            let mut w = Vec::new();
            let mut i = first;
            while (i as f64) < hi && i < src {
                let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                if overlap > 0.0 {
                    w.push((i, overlap / ratio));
                }
                i += 1;
            }
            w
        })
        .collect()
}

/// Area-averaged resampling of a `side × side` single-channel grid.
pub fn area_downsample(src: &[f64], side: usize, out_side: usize) -> Vec<f64> {
    let w = area_weights(side, out_side);
    let mut rows = vec![0.0; out_side * side];
    for (o, ws) in w.iter().enumerate() {
        for &(r, wr) in ws {
            for c in 0..side {
                rows[o * side + c] += wr * src[r * side + c];
            }
        }
    }
    let mut out = vec![0.0; out_side * out_side];
    for r in 0..out_side {
        for (o, ws) in w.iter().enumerate() {
            out[r * out_side + o] = ws.iter().map(|&(c, wc)| wc * rows[r * side + c]).sum();
        }
    }
    out
}

/// Luminance feature vector of a scalogram image.
pub fn features(img: &ScalogramImage) -> Vec<f64> {
    let lum: Vec<f64> = img
        .pixels()
        .chunks_exact(3)
        .map(|p| (p[0] as f64 + p[1] as f64 + p[2] as f64) / (3.0 * 255.0))
        .collect();
    area_downsample(&lum, img.side(), FEATURE_SIDE)
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect()
}

pub trait Classifier {
    fn n_classes(&self) -> usize;

    /// Class membership scores that sum to one.
    fn predict_proba(&self, x: &[f64]) -> Vec<f64>;

    fn predict(&self, x: &[f64]) -> usize {
        math::argmax(&self.predict_proba(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MlKind {
    Nb,
    Knn,
    Rf,
    Svm,
}

impl MlKind {
    pub const ALL: [MlKind; 4] = [MlKind::Nb, MlKind::Knn, MlKind::Rf, MlKind::Svm];

    pub fn as_str(self) -> &'static str {
        match self {
            MlKind::Nb => "nb",
            MlKind::Knn => "knn",
            MlKind::Rf => "rf",
            MlKind::Svm => "svm",
        }
    }
}

/// Hyperparameters for every classical classifier.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MlParams {
    pub nb: NbParams,
    pub knn: KnnParams,
    pub rf: ForestParams,
    pub svm: SvmParams,
}

/// A trained classical classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MlModel {
    Nb(GaussianNb),
    Knn(Knn),
    Rf(RandomForest),
    Svm(Svm),
}

impl MlModel {
    pub fn fit(kind: MlKind, params: &MlParams, data: &FeatureSet) -> Result<Self, MlError> {
        Ok(match kind {
            MlKind::Nb => MlModel::Nb(GaussianNb::fit(data, &params.nb)?),
            MlKind::Knn => MlModel::Knn(Knn::fit(data, &params.knn)?),
            MlKind::Rf => MlModel::Rf(RandomForest::fit(data, &params.rf)?),
            MlKind::Svm => MlModel::Svm(Svm::fit(data, &params.svm)?),
        })
    }

    pub fn kind(&self) -> MlKind {
        match self {
            MlModel::Nb(_) => MlKind::Nb,
            MlModel::Knn(_) => MlKind::Knn,
            MlModel::Rf(_) => MlKind::Rf,
            MlModel::Svm(_) => MlKind::Svm,
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            MlModel::Nb(m) => m,
            MlModel::Knn(m) => m,
            MlModel::Rf(m) => m,
            MlModel::Svm(m) => m,
        }
    }
}

impl Classifier for MlModel {
    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.inner().predict_proba(x)
    }

    fn predict(&self, x: &[f64]) -> usize {
        self.inner().predict(x)
    }
}
