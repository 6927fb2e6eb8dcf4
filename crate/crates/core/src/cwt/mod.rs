//! Morlet continuous wavelet transform.
//!
//! `X(a, b) = (1/√a) Σ_t conj(ψ((t − b)/a)) · x(t)` on a unit-step sample grid,
//! with the analytic Morlet `ψ(t) = π^(−1/4) · e^(i·2π·fc·t) · e^(−t²/2)`.
//! The wavelet is truncated at `|t − b| > 8a`, where the envelope is below
//! 1e-14, and the signal is zero-padded at both ends.
//!
//! With `fc` in cycles per sample a pure tone of period `P` samples peaks at
//! scale `a ≈ P·fc`.

mod colormap;
mod render;

pub use colormap::JET;
pub use render::{
    log_normalized, render, render_with, resize_bilinear, RenderOutcome, ScalogramImage, DEFAULT_SIDE,
};

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;
use crate::par;

/// Centre frequency of the mother wavelet, in cycles per unit time.
pub const DEFAULT_FC: f64 = 1.0;
/// Number of scales in the default grid.
pub const DEFAULT_SCALES: usize = 64;
/// Support of the truncated wavelet, in units of scale.
pub const SUPPORT: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CwtError {
    #[error("scale {scale} exceeds half the signal length ({limit})")]
    ScaleTooLarge { scale: f64, limit: f64 },
    #[error("scale {0} is below one sample")]
    ScaleTooSmall(f64),
    #[error("scales must be strictly ascending and finite")]
    InvalidScales,
    #[error("invalid scale grid: need 0 < a_min < a_max and n >= 2")]
    InvalidGrid,
    #[error("centre frequency must be positive")]
    InvalidCentreFrequency,
    #[error("signal is empty")]
    EmptySignal,
    #[error("render side {0} is below 16")]
    SideTooSmall(usize),
}

/// The Morlet wavelet at `t`.
pub fn morlet(t: f64, fc: f64) -> Complex64 {
    let norm = math::pow(PI, -0.25) * math::exp(-0.5 * t * t);
    let (s, c) = math::sin_cos(2.0 * PI * fc * t);
    Complex64::new(norm * c, norm * s)
}

/// `n` log-spaced scales from `a_min` to `a_max`, endpoints exact.
pub fn scales_grid(n: usize, a_min: f64, a_max: f64) -> Result<Vec<f64>, CwtError> {
    if n < 2 || !(a_min > 0.0) || !(a_max > a_min) || !a_max.is_finite() {
        return Err(CwtError::InvalidGrid);
    }
    let ratio = math::ln(a_max / a_min) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| match i {
            0 => a_min,
            i if i + 1 == n => a_max,
            i => a_min * math::exp(ratio * i as f64),
        })
        .collect())
}

/// Default scale axis for a signal of `len` samples: 64 log-spaced scales
/// over `[1, len/4]`.
pub fn default_scales(len: usize) -> Result<Vec<f64>, CwtError> {
    scales_grid(DEFAULT_SCALES, 1.0, len as f64 / 4.0)
}

/// Complex CWT coefficients, one row per scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scalogram {
    scales: Vec<f64>,
    len: usize,
    coefficients: Vec<Complex64>,
    pub source_id: String,
}

impl Scalogram {
    pub fn new(scales: Vec<f64>, len: usize, coefficients: Vec<Complex64>) -> Self {
        assert_eq!(scales.len() * len, coefficients.len(), "coefficient matrix shape");
        Self { scales, len, coefficients, source_id: String::new() }
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Number of shifts per row (the signal length).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn row(&self, scale_index: usize) -> &[Complex64] {
        &self.coefficients[scale_index * self.len..(scale_index + 1) * self.len]
    }

    pub fn at(&self, scale_index: usize, shift: usize) -> Complex64 {
        self.coefficients[scale_index * self.len + shift]
    }

    /// `|X|`, row-major.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.norm()).collect()
    }
}

fn check(signal: &[f64], scales: &[f64], fc: f64) -> Result<(), CwtError> {
    if signal.is_empty() {
        return Err(CwtError::EmptySignal);
    }
    if !(fc > 0.0) || !fc.is_finite() {
        return Err(CwtError::InvalidCentreFrequency);
    }
    if scales.is_empty() || scales.iter().any(|a| !a.is_finite()) || scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CwtError::InvalidScales);
    }
    if scales[0] < 1.0 {
        return Err(CwtError::ScaleTooSmall(scales[0]));
    }
    let limit = signal.len() as f64 / 2.0;
    let top = scales[scales.len() - 1];
    if top > limit {
        return Err(CwtError::ScaleTooLarge { scale: top, limit });
    }
    Ok(())
}

/// Half-width of the truncated kernel at scale `a`, capped by the signal.
fn half_width(a: f64, len: usize) -> usize {
    let l = math::floor(SUPPORT * a) as usize;
    l.min(len - 1)
}

/// `conj(ψ(d/a))/√a` for `d = −L..=L`.
fn kernel(a: f64, fc: f64, l: usize) -> Vec<Complex64> {
    let scale = 1.0 / math::sqrt(a);
    (0..=2 * l)
        .map(|k| {
            let d = k as f64 - l as f64;
            morlet(d / a, fc).conj() * scale
        })
        .collect()
}

/// Reference implementation: direct summation in the sample domain.
pub fn cwt_direct(signal: &[f64], scales: &[f64], fc: f64) -> Result<Scalogram, CwtError> {
    check(signal, scales, fc)?;
    let n = signal.len();
    let rows = par::map_indices(scales.len(), |s| {
        let a = scales[s];
        let l = half_width(a, n);
        let k = kernel(a, fc, l);
        let mut row = Vec::with_capacity(n);
        for b in 0..n {
            let lo = b.saturating_sub(l);
            let hi = (b + l).min(n - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &x) in signal.iter().enumerate().take(hi + 1).skip(lo) {
                acc += k[t + l - b] * x;
            }
            row.push(acc);
        }
        row
    });
    Ok(Scalogram::new(scales.to_vec(), n, rows.concat()))
}

/// Same transform evaluated as an FFT convolution. Matches [`cwt_direct`] to
/// rounding error.
#[cfg(feature = "std")]
pub fn cwt_fft(signal: &[f64], scales: &[f64], fc: f64) -> Result<Scalogram, CwtError> {
    use rustfft::FftPlanner;

    check(signal, scales, fc)?;
    let n = signal.len();
    // Every kernel has half-width below n, so one size avoids wrap-around
    // for all scales.
    let m = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut spectrum = alloc::vec![Complex64::new(0.0, 0.0); m];
    for (dst, &v) in spectrum.iter_mut().zip(signal) {
        dst.re = v;
    }
    fwd.process(&mut spectrum);

    let rows = par::map_indices(scales.len(), |s| {
        let a = scales[s];
        let l = half_width(a, n);
        let k = kernel(a, fc, l);
        // X(b) = Σ_t x(t)·g(b − t) with g(j) = k(−j); g(j) sits at j mod m.
        let mut g = alloc::vec![Complex64::new(0.0, 0.0); m];
        for (idx, &kv) in k.iter().enumerate() {
            let d = idx as isize - l as isize;
            let j = (-d).rem_euclid(m as isize) as usize;
            g[j] = kv;
        }
        fwd.process(&mut g);
        for (y, x) in g.iter_mut().zip(&spectrum) {
            *y *= *x;
        }
        inv.process(&mut g);
        let inv_m = 1.0 / m as f64;
        g.truncate(n);
        for v in &mut g {
            *v *= inv_m;
        }
        g
    });
    Ok(Scalogram::new(scales.to_vec(), n, rows.concat()))
}

/// CWT through the fastest available path.
pub fn cwt(signal: &[f64], scales: &[f64], fc: f64) -> Result<Scalogram, CwtError> {
    #[cfg(feature = "std")]
    {
        cwt_fft(signal, scales, fc)
    }
    #[cfg(not(feature = "std"))]
    {
        cwt_direct(signal, scales, fc)
    }
}

/// Scale axis and image size used to turn a spectrum into an image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformConfig {
    pub n_scales: usize,
    pub a_min: f64,
    /// Largest scale; `None` means a quarter of the signal length.
    pub a_max: Option<f64>,
    pub fc: f64,
    pub side: usize,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self { n_scales: DEFAULT_SCALES, a_min: 1.0, a_max: None, fc: DEFAULT_FC, side: DEFAULT_SIDE }
    }
}

impl TransformConfig {
    pub fn scales(&self, len: usize) -> Result<Vec<f64>, CwtError> {
        scales_grid(self.n_scales, self.a_min, self.a_max.unwrap_or(len as f64 / 4.0))
    }
}

/// Spectrum intensities to a rendered scalogram image.
pub fn scalogram_image(signal: &[f64], cfg: &TransformConfig) -> Result<RenderOutcome, CwtError> {
    let sc = cwt(signal, &cfg.scales(signal.len())?, cfg.fc)?;
    render(&sc, cfg.side)
}
