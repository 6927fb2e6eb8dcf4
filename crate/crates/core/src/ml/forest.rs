use alloc::vec;
use alloc::vec::Vec;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Classifier, FeatureSet, MlError};
use crate::math;
use crate::par;
use crate::seed::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features tried per node; `None` means `⌊√d⌋`.
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: 16, max_features: None, min_samples_split: 2, bootstrap: true, seed: 0 }
    }
}

/// Gini impurity `1 − Σ p_c²` of a class histogram.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n) * (c as f64 / n)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    /// Samples with `x[feature] <= threshold` go left.
    pub threshold: f64,
    /// Impurity decrease, weighted by child size.
    pub gain: f64,
}

/// Best Gini split of `rows` over the given `features`, scanning every
/// midpoint between consecutive distinct values. Ties keep the earlier
/// feature and the lower threshold. `None` if no split decreases impurity.
pub fn best_split(data: &FeatureSet, rows: &[usize], features: &[usize]) -> Option<SplitCandidate> {
    let c = data.n_classes();
    let mut parent = vec![0usize; c];
    for &r in rows {
        parent[data.label(r)] += 1;
    }
    let n = rows.len() as f64;
    let parent_gini = gini(&parent);
    let mut best: Option<SplitCandidate> = None;
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    let mut left = vec![0usize; c];
    let mut right = vec![0usize; c];
    for &f in features {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (data.row(r)[f], data.label(r))));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        left.iter_mut().for_each(|v| *v = 0);
        right.copy_from_slice(&parent);
        for i in 0..pairs.len() - 1 {
            let y = pairs[i].1;
            left[y] += 1;
            right[y] -= 1;
            let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
            if lo >= hi {
                continue;
            }
            let nl = (i + 1) as f64;
            let gain = parent_gini - (nl / n) * gini(&left) - ((n - nl) / n) * gini(&right);
            if gain > 1e-12 && best.map_or(true, |b| gain > b.gain + 1e-12) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some(SplitCandidate { feature: f, threshold, gain });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { distribution: Vec<f64> },
    Split { feature: usize, threshold: f64, left: u32, right: u32 },
}

/// CART tree with Gini splits; leaves hold the class distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

struct Grower<'a, R> {
    data: &'a FeatureSet,
    params: &'a ForestParams,
    mtry: usize,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

impl<R: Rng> Grower<'_, R> {
    fn leaf(&mut self, rows: &[usize]) -> u32 {
        let mut dist = vec![0.0; self.data.n_classes()];
        for &r in rows {
            dist[self.data.label(r)] += 1.0;
        }
        let n = rows.len() as f64;
        dist.iter_mut().for_each(|p| *p /= n);
        self.nodes.push(Node::Leaf { distribution: dist });
        (self.nodes.len() - 1) as u32
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> u32 {
        let first = self.data.label(rows[0]);
        let pure = rows.iter().all(|&r| self.data.label(r) == first);
        if pure || depth >= self.params.max_depth || rows.len() < self.params.min_samples_split {
            return self.leaf(rows);
        }
        let d = self.data.dim();
        let mut features = index::sample(self.rng, d, self.mtry).into_vec();
        features.sort_unstable();
        let Some(split) = best_split(self.data, rows, &features) else {
            return self.leaf(rows);
        };
        let at = partition(rows, |r| self.data.row(r)[split.feature] <= split.threshold);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { distribution: Vec::new() });
        let (l, r) = rows.split_at_mut(at);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        id as u32
    }
}

/// Stable in-place partition; returns the number of elements satisfying `pred`.
fn partition(rows: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| pred(r));
    let at = yes.len();
    rows[..at].copy_from_slice(&yes);
    rows[at..].copy_from_slice(&no);
    at
}

impl DecisionTree {
    fn grow<R: Rng>(data: &FeatureSet, rows: &mut [usize], params: &ForestParams, mtry: usize, rng: &mut R) -> Self {
        let mut g = Grower { data, params, mtry, rng, nodes: Vec::new() };
        g.grow(rows, 0);
        Self { nodes: g.nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn distribution(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { distribution } => return distribution,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        math::argmax(self.distribution(x))
    }
}

/// Bagged CART trees; the forest predicts by majority vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    n_classes: usize,
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(data: &FeatureSet, params: &ForestParams) -> Result<Self, MlError> {
        data.require_nonempty()?;
        if params.n_trees == 0 || params.max_depth == 0 {
            return Err(MlError::InvalidParameter("forest needs at least one tree of depth one"));
        }
        let d = data.dim();
        let mtry = params.max_features.unwrap_or_else(|| (math::floor(math::sqrt(d as f64)) as usize).max(1));
        if mtry == 0 || mtry > d {
            return Err(MlError::InvalidParameter("max_features must be in [1, d]"));
        }
        let n = data.len();
        let trees = par::map_indices(params.n_trees, |t| {
            let mut rng = seed::rng(seed::derive(params.seed, t as u64), Stream::Bootstrap);
            let mut rows: Vec<usize> =
                if params.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
            DecisionTree::grow(data, &mut rows, params, mtry, &mut rng)
        });
        Ok(Self { n_classes: data.n_classes(), trees })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }
}

impl Classifier for RandomForest {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1.0;
        }
        let n = self.trees.len() as f64;
        votes.iter_mut().for_each(|v| *v /= n);
        votes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[5, 0]), 0.0);
        assert_eq!(gini(&[5, 5]), 0.5);
        assert!((gini(&[1, 1, 1]) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_tree_separates_training_data() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let data = FeatureSet::from_rows(&rows, &labels, 2).unwrap();
        let p = ForestParams { n_trees: 1, bootstrap: false, max_features: Some(2), ..Default::default() };
        let f = RandomForest::fit(&data, &p).unwrap();
        for (i, &y) in labels.iter().enumerate() {
            assert_eq!(f.predict(data.row(i)), y);
        }
        assert_eq!(f.trees()[0].depth(), 1);
    }

    #[test]
    fn depth_limit_respected() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let labels: Vec<usize> = (0..64).map(|i| i % 2).collect();
        let data = FeatureSet::from_rows(&rows, &labels, 2).unwrap();
        let p = ForestParams { n_trees: 3, max_depth: 4, ..Default::default() };
        let f = RandomForest::fit(&data, &p).unwrap();
        assert!(f.trees().iter().all(|t| t.depth() <= 4));
    }

    #[test]
    fn same_seed_same_forest() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 7) as f64, (i % 3) as f64, i as f64]).collect();
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let data = FeatureSet::from_rows(&rows, &labels, 3).unwrap();
        let p = ForestParams { n_trees: 10, seed: 9, ..Default::default() };
        assert_eq!(RandomForest::fit(&data, &p).unwrap(), RandomForest::fit(&data, &p).unwrap());
    }
}
