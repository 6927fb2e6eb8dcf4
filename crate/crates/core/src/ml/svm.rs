use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{Classifier, FeatureSet, MlError};
use crate::math;
use crate::par;

const TAU: f64 = 1e-12;

/// Kernels above this many training points are computed row by row instead
/// of being held in memory.
const DENSE_KERNEL_LIMIT: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                math::exp(-gamma * d2)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    /// `None` means RBF with `γ = 1/d`.
    pub kernel: Option<Kernel>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 10.0, kernel: None, tol: 1e-3, max_iter: 200_000 }
    }
}

/// Output of the dual solver for one binary problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// `Σα − ½ Σ α_i α_j y_i y_j K_ij`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

enum KernelRows<'a> {
    Dense(&'a [f64]),
    Lazy { data: &'a FeatureSet, kernel: Kernel },
}

impl KernelRows<'_> {
    fn n(&self) -> usize {
        match self {
            KernelRows::Dense(k) => math::sqrt(k.len() as f64) as usize,
            KernelRows::Lazy { data, .. } => data.len(),
        }
    }

    fn row(&self, i: usize, buf: &mut Vec<f64>) {
        match self {
            KernelRows::Dense(k) => {
                let n = self.n();
                buf.clear();
                buf.extend_from_slice(&k[i * n..(i + 1) * n]);
            }
            KernelRows::Lazy { data, kernel } => {
                buf.clear();
                buf.extend((0..data.len()).map(|j| kernel.eval(data.row(i), data.row(j))));
            }
        }
    }

    fn diag(&self) -> Vec<f64> {
        match self {
            KernelRows::Dense(k) => {
                let n = self.n();
                (0..n).map(|i| k[i * n + i]).collect()
            }
            KernelRows::Lazy { data, kernel } => (0..data.len()).map(|i| kernel.eval(data.row(i), data.row(i))).collect(),
        }
    }
}

/// Solves the C-SVM dual for labels `y ∈ {−1, +1}` with sequential minimal
/// optimization and second-order working-set selection.
///
/// `kernel` is the dense `n × n` Gram matrix in row-major order.
pub fn solve_binary(kernel: &[f64], y: &[f64], c: f64, tol: f64, max_iter: usize) -> SmoSolution {
    smo(&KernelRows::Dense(kernel), y, c, tol, max_iter)
}

fn smo(k: &KernelRows<'_>, y: &[f64], c: f64, tol: f64, max_iter: usize) -> SmoSolution {
    let n = y.len();
    let qd = k.diag();
    let mut alpha = vec![0.0; n];
    // Gradient of ½αᵀQα − eᵀα with Q_ij = y_i y_j K_ij.
    let mut g = vec![-1.0; n];
    let (mut ki, mut kj) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let up = |a: f64, yt: f64| if yt > 0.0 { a < c } else { a > 0.0 };
    let low = |a: f64, yt: f64| if yt > 0.0 { a > 0.0 } else { a < c };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if up(alpha[t], y[t]) && -y[t] * g[t] > gmax {
                gmax = -y[t] * g[t];
                i = t;
            }
        }
        if i == usize::MAX {
            converged = true;
            break;
        }
        k.row(i, &mut ki);
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * g[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let mut a = qd[i] + qd[t] - 2.0 * ki[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if gmax - gmin < tol || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;
        k.row(j, &mut kj);

        let (ai, aj) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * ki[j];
        if y[i] != y[j] {
            let mut quad = qd[i] + qd[j] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = ai - aj;
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qd[i] + qd[j] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = ai + aj;
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (dai, daj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            g[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj);
        }
    }

    // Bias from free vectors, or the middle of the feasible interval.
    let (mut ub, mut lb, mut sum, mut free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * g[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };
    // With G = Qα − e, αᵀQα = αᵀ(G + e).
    let objective = alpha.iter().sum::<f64>() - 0.5 * alpha.iter().zip(&g).map(|(a, gi)| a * (gi + 1.0)).sum::<f64>();
    SmoSolution { alpha, bias: -rho, objective, iterations, converged }
}

/// One binary machine over a subset of the shared support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    /// Indices into the model's support-vector store.
    pub support: Vec<u32>,
    /// `α_i y_i` for each support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// One-vs-rest C-SVM. Probabilities are the softmax of the decision values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Svm {
    kernel: Kernel,
    dim: usize,
    vectors: Vec<f64>,
    machines: Vec<BinarySvm>,
}

impl Svm {
    pub fn fit(data: &FeatureSet, params: &SvmParams) -> Result<Self, MlError> {
        data.require_nonempty()?;
        if !(params.c > 0.0) || !(params.tol > 0.0) {
            return Err(MlError::InvalidParameter("C and tol must be positive"));
        }
        let (n, d) = (data.len(), data.dim());
        let kernel = params.kernel.unwrap_or(Kernel::Rbf { gamma: 1.0 / d as f64 });
        let dense;
        let rows = if n <= DENSE_KERNEL_LIMIT {
            dense = gram(data, kernel);
            KernelRows::Dense(&dense)
        } else {
            KernelRows::Lazy { data, kernel }
        };

        let mut store: Vec<Option<u32>> = vec![None; n];
        let mut vectors = Vec::new();
        let mut machines = Vec::new();
        for class in 0..data.n_classes() {
            let y: Vec<f64> = data.labels().iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
            let sol = smo(&rows, &y, params.c, params.tol, params.max_iter);
            if !sol.converged {
                log::warn!("svm class {class}: no convergence after {} iterations", sol.iterations);
            }
            let mut support = Vec::new();
            let mut coef = Vec::new();
            for (t, &a) in sol.alpha.iter().enumerate() {
                if a > 0.0 {
                    let slot = *store[t].get_or_insert_with(|| {
                        vectors.extend_from_slice(data.row(t));
                        (vectors.len() / d - 1) as u32
                    });
                    support.push(slot);
                    coef.push(a * y[t]);
                }
            }
            machines.push(BinarySvm { support, coef, bias: sol.bias, converged: sol.converged, iterations: sol.iterations });
        }
        Ok(Self { kernel, dim: d, vectors, machines })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn machines(&self) -> &[BinarySvm] {
        &self.machines
    }

    pub fn converged(&self) -> bool {
        self.machines.iter().all(|m| m.converged)
    }

    pub fn n_support(&self) -> usize {
        self.vectors.len() / self.dim.max(1)
    }

    /// One-vs-rest decision value per class.
    pub fn decision(&self, x: &[f64]) -> Vec<f64> {
        let k: Vec<f64> = self.vectors.chunks_exact(self.dim).map(|v| self.kernel.eval(v, x)).collect();
        self.machines
            .iter()
            .map(|m| m.support.iter().zip(&m.coef).map(|(&s, &a)| a * k[s as usize]).sum::<f64>() + m.bias)
            .collect()
    }
}

fn gram(data: &FeatureSet, kernel: Kernel) -> Vec<f64> {
    let n = data.len();
    let rows = par::map_indices(n, |i| (0..=i).map(|j| kernel.eval(data.row(i), data.row(j))).collect::<Vec<_>>());
    let mut k = vec![0.0; n * n];
    for (i, r) in rows.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

impl Classifier for Svm {
    fn n_classes(&self) -> usize {
        self.machines.len()
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut p = self.decision(x);
        math::softmax_in_place(&mut p);
        p
    }

    fn predict(&self, x: &[f64]) -> usize {
        math::argmax(&self.decision(x))
    }
}
