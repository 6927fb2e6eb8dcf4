//! Confusion matrices, per-class metrics and accuracy-vs-SNR sweeps.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::Scenario;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("label {label} at position {index} is outside [0, {classes})")]
    LabelOutOfRange { index: usize, label: usize, classes: usize },
    #[error("actual and predicted lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two SNR points")]
    TooFewPoints,
    #[error("empty input")]
    EmptyInput,
}

/// Counts indexed `[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        let c = counts.len();
        if c == 0 || counts.iter().any(|r| r.len() != c) {
            return Err(EvalError::EmptyInput);
        }
        Ok(Self { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual][predicted]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Row-normalized view (each actual class sums to 1; empty rows stay 0).
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|r| {
                let s: u64 = r.iter().sum();
                r.iter().map(|&v| if s == 0 { 0.0 } else { v as f64 / s as f64 }).collect()
            })
            .collect()
    }

    /// Applies a class relabeling `perm[old] = new`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let c = self.classes();
        let mut counts = vec![vec![0; c]; c];
        for (a, row) in self.counts.iter().enumerate() {
            for (p, &v) in row.iter().enumerate() {
                counts[perm[a]][perm[p]] = v;
            }
        }
        Self { counts }
    }
}

pub fn confusion(actual: &[usize], predicted: &[usize], classes: usize) -> Result<ConfusionMatrix, EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(actual.len(), predicted.len()));
    }
    if classes == 0 {
        return Err(EvalError::EmptyInput);
    }
    let mut counts = vec![vec![0u64; classes]; classes];
    for (index, (&a, &p)) in actual.iter().zip(predicted).enumerate() {
        for label in [a, p] {
            if label >= classes {
                return Err(EvalError::LabelOutOfRange { index, label, classes });
            }
        }
        counts[a][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Precision was 0/0 (class never predicted) and reported as 0.
    pub precision_undefined: bool,
    /// Recall was 0/0 (class absent) and reported as 0.
    pub recall_undefined: bool,
    /// F1 was 0/0 and reported as 0.
    pub f1_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub samples: u64,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Precision, recall and F1 (β = 1) per class plus unweighted macro means.
/// 0/0 cases are reported as 0 and flagged.
pub fn metrics(cm: &ConfusionMatrix) -> EvalReport {
    let c = cm.classes();
    let per_class: Vec<ClassMetrics> = (0..c)
        .map(|k| {
            let tp = cm.get(k, k);
            let predicted: u64 = (0..c).map(|a| cm.get(a, k)).sum();
            let actual: u64 = cm.rows()[k].iter().sum();
            let (precision, precision_undefined) = ratio(tp, predicted);
            let (recall, recall_undefined) = ratio(tp, actual);
            let (f1, f1_undefined) = if precision + recall == 0.0 {
                (0.0, true)
            } else {
                (2.0 * precision * recall / (precision + recall), false)
            };
            ClassMetrics { precision, recall, f1, support: actual, precision_undefined, recall_undefined, f1_undefined }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / c as f64;
    let total = cm.total();
    EvalReport {
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        accuracy: ratio(cm.trace(), total).0,
        samples: total,
        per_class,
        confusion: cm.clone(),
    }
}

/// Anything that assigns a class to an input of type `T`.
pub trait Predictor<T: ?Sized> {
    fn name(&self) -> String;
    fn predict(&self, input: &T) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub accuracy: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub classifier: String,
    pub scenario: Scenario,
    pub points: Vec<SweepPoint>,
}

/// Evaluates every predictor at every SNR point. The test set for a point is
/// generated once and shared by all predictors.
pub fn snr_sweep<T, G>(
    predictors: &[&dyn Predictor<T>],
    mut generate: G,
    snr_points: &[f64],
    scenario: Scenario,
) -> Result<Vec<SweepCurve>, EvalError>
where
    G: FnMut(f64) -> Vec<(T, usize)>,
{
    if snr_points.len() < 2 {
        return Err(EvalError::TooFewPoints);
    }
    let mut points: Vec<f64> = snr_points.to_vec();
    points.sort_by(f64::total_cmp);
    let mut curves: Vec<SweepCurve> = predictors
        .iter()
        .map(|p| SweepCurve { classifier: p.name(), scenario, points: Vec::new() })
        .collect();
    for &snr in &points {
        let set = generate(snr);
        if set.is_empty() {
            return Err(EvalError::EmptyInput);
        }
        for (p, curve) in predictors.iter().zip(curves.iter_mut()) {
            let correct = set.iter().filter(|(x, y)| p.predict(x) == *y).count();
            curve.points.push(SweepPoint { snr_db: snr, accuracy: correct as f64 / set.len() as f64, n_samples: set.len() });
        }
    }
    Ok(curves)
}

/// Smallest SNR at which the curve reaches `level`, interpolating linearly
/// between points. `None` if it never does.
pub fn threshold_snr(curve: &SweepCurve, level: f64) -> Option<f64> {
    let pts = &curve.points;
    let first = pts.first()?;
    if first.accuracy >= level {
        return Some(first.snr_db);
    }
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.accuracy < level && b.accuracy >= level {
            let t = (level - a.accuracy) / (b.accuracy - a.accuracy);
            return Some(a.snr_db + t * (b.snr_db - a.snr_db));
        }
    }
    None
}
