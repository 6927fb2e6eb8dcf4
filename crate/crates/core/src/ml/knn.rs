use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{Classifier, FeatureSet, MlError};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// k-nearest neighbours under Euclidean distance.
///
/// Vote ties go to the class with the smaller summed neighbour distance, then
/// to the lower class index. Neighbours at equal distance are taken in
/// training order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    train: FeatureSet,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Knn {
    pub fn fit(data: &FeatureSet, params: &KnnParams) -> Result<Self, MlError> {
        data.require_nonempty()?;
        if params.k == 0 {
            return Err(MlError::InvalidParameter("k must be at least 1"));
        }
        if params.k > data.len() {
            return Err(MlError::InvalidParameter("k exceeds the training set size"));
        }
        Ok(Self { k: params.k, train: data.clone() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Indices and distances of the k nearest training points, nearest first.
    pub fn neighbours(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let mut d: Vec<(f64, usize)> = (0..self.train.len())
            .map(|i| (squared_distance(self.train.row(i), x), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(d2, i)| (i, math::sqrt(d2))).collect()
    }

    fn tally(&self, x: &[f64]) -> (Vec<usize>, Vec<f64>) {
        let c = self.train.n_classes();
        let mut votes = vec![0usize; c];
        let mut dist = vec![0.0; c];
        for (i, d) in self.neighbours(x) {
            let y = self.train.label(i);
            votes[y] += 1;
            dist[y] += d;
        }
        (votes, dist)
    }
}

impl Classifier for Knn {
    fn n_classes(&self) -> usize {
        self.train.n_classes()
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let (votes, _) = self.tally(x);
        votes.iter().map(|&v| v as f64 / self.k as f64).collect()
    }

    fn predict(&self, x: &[f64]) -> usize {
        let (votes, dist) = self.tally(x);
        let mut best = 0;
        for c in 1..votes.len() {
            if votes[c] > votes[best] || (votes[c] == votes[best] && dist[c] < dist[best]) {
                best = c;
            }
        }
        best
    }
}
