//! One-dimensional Raman spectra.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum number of points in a spectrum.
pub const MIN_POINTS: usize = 16;

/// Default length of the canonical uniform grid.
pub const DEFAULT_GRID_LEN: usize = 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("wavenumber and intensity lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("spectrum has {0} points, at least {MIN_POINTS} required")]
    TooShort(usize),
    #[error("wavenumbers not strictly ascending at index {0}")]
    NotAscending(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid peak {index}: {reason}")]
    InvalidPeak { index: usize, reason: &'static str },
    #[error("synthetic spectrum is constant")]
    Constant,
}

/// A Raman spectrum: intensities sampled on a strictly ascending wavenumber
/// axis (cm⁻¹).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    wavenumbers: Vec<f64>,
    intensities: Vec<f64>,
    pub label: Option<String>,
    pub source_id: String,
}

impl Spectrum {
    pub fn new(
        wavenumbers: Vec<f64>,
        intensities: Vec<f64>,
        label: Option<String>,
        source_id: impl Into<String>,
    ) -> Result<Self, SpectrumError> {
        if wavenumbers.len() != intensities.len() {
            return Err(SpectrumError::LengthMismatch(wavenumbers.len(), intensities.len()));
        }
        if wavenumbers.len() < MIN_POINTS {
            return Err(SpectrumError::TooShort(wavenumbers.len()));
        }
        for (i, (x, y)) in wavenumbers.iter().zip(&intensities).enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(SpectrumError::NonFinite(i));
            }
        }
        if let Some(i) = wavenumbers.windows(2).position(|w| w[1] <= w[0]) {
            return Err(SpectrumError::NotAscending(i + 1));
        }
        Ok(Self {
            wavenumbers,
            intensities,
            label,
            source_id: source_id.into(),
        })
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    /// Same axis and metadata, new intensities.
    pub fn with_intensities(&self, intensities: Vec<f64>) -> Result<Self, SpectrumError> {
        Self::new(
            self.wavenumbers.clone(),
            intensities,
            self.label.clone(),
            self.source_id.clone(),
        )
    }

    pub fn min_max(&self) -> (f64, f64) {
        min_max(&self.intensities)
    }

    pub fn is_constant(&self) -> bool {
        let (lo, hi) = self.min_max();
        hi == lo
    }

    /// Min-max scales intensities to `[0, 1]`. A constant signal is returned
    /// unchanged.
    pub fn normalized(&self) -> Self {
        let (lo, hi) = self.min_max();
        if hi == lo {
            return self.clone();
        }
        let span = hi - lo;
        let mut out = self.clone();
        for v in &mut out.intensities {
            *v = (*v - lo) / span;
        }
        out
    }

    /// Index of the largest intensity (first on ties).
    pub fn peak_index(&self) -> usize {
        crate::math::argmax(&self.intensities)
    }

    pub fn span(&self) -> f64 {
        self.wavenumbers[self.len() - 1] - self.wavenumbers[0]
    }

    /// True if consecutive spacings agree within `rel_tol` of the mean step.
    pub fn is_uniform(&self, rel_tol: f64) -> bool {
        let step = self.span() / (self.len() - 1) as f64;
        self.wavenumbers
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= rel_tol * step)
    }
}

pub(crate) fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// A Lorentzian line: `height · width² / ((x − center)² + width²)`.
///
/// `width` is the half width at half maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub center: f64,
    pub width: f64,
    pub height: f64,
}

impl Peak {
    pub const fn new(center: f64, width: f64, height: f64) -> Self {
        Self { center, width, height }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.center;
        let w2 = self.width * self.width;
        self.height * w2 / (d * d + w2)
    }
}

/// Sum of Lorentzian lines at `x`, without normalization.
pub fn lorentzian_sum(peaks: &[Peak], x: f64) -> f64 {
    peaks.iter().map(|p| p.eval(x)).sum()
}

/// Evaluates a sum of Lorentzian peaks on `grid` and normalizes the result to
/// `[0, 1]`.
pub fn synth_lorentzian(
    peaks: &[Peak],
    grid: &[f64],
    label: Option<String>,
    source_id: impl Into<String>,
) -> Result<Spectrum, SpectrumError> {
    if peaks.is_empty() {
        return Err(SpectrumError::InvalidPeak { index: 0, reason: "empty peak list" });
    }
    for (index, p) in peaks.iter().enumerate() {
        if !(p.width > 0.0) || !p.width.is_finite() {
            return Err(SpectrumError::InvalidPeak { index, reason: "width must be positive" });
        }
        if !(p.height > 0.0) || !p.height.is_finite() {
            return Err(SpectrumError::InvalidPeak { index, reason: "height must be positive" });
        }
        if !p.center.is_finite() {
            return Err(SpectrumError::InvalidPeak { index, reason: "center must be finite" });
        }
    }
    let values = grid.iter().map(|&x| lorentzian_sum(peaks, x)).collect();
    let s = Spectrum::new(grid.to_vec(), values, label, source_id)?;
    if s.is_constant() {
        return Err(SpectrumError::Constant);
    }
    Ok(s.normalized())
}

/// `n` evenly spaced points from `start` to `end`, both endpoints exact.
pub fn uniform_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    let step = (end - start) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { end } else { start + step * i as f64 })
        .collect()
}

/// Linear interpolation onto `n` uniformly spaced wavenumbers spanning the
/// original axis. Endpoints are preserved exactly.
pub fn resample(s: &Spectrum, n: usize) -> Result<Spectrum, SpectrumError> {
    if n < MIN_POINTS {
        return Err(SpectrumError::TooShort(n));
    }
    let xs = s.wavenumbers();
    let ys = s.intensities();
    let grid = uniform_grid(xs[0], xs[xs.len() - 1], n);
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for (i, &x) in grid.iter().enumerate() {
        if i == 0 {
            out.push(ys[0]);
            continue;
        }
        if i + 1 == n {
            out.push(ys[ys.len() - 1]);
            continue;
        }
        while j + 2 < xs.len() && xs[j + 1] < x {
            j += 1;
        }
        let (x0, x1) = (xs[j], xs[j + 1]);
        let t = (x - x0) / (x1 - x0);
        out.push(ys[j] + t * (ys[j + 1] - ys[j]));
    }
    Spectrum::new(grid, out, s.label.clone(), s.source_id.clone())
}
