//! Core numerics for classifying noisy Raman spectra from Morlet wavelet
//! scalograms.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. File formats, IO and the command line live in the `ramanscope`
//! companion crate.
//!
//! Pipeline, bottom to top:
//!
//! - [`spectrum`]: the 1-D signal type, synthetic Lorentzian spectra and
//!   uniform resampling.
//! - [`noise`] and [`dataset`]: baseline drift and white Gaussian noise at a
//!   calibrated SNR, and augmented train/test sets built from clean originals.
//! - [`cwt`]: Morlet continuous wavelet transform and scalogram rendering.
//! - [`ml`]: Gaussian naive Bayes, k-NN, random forest and SMO-trained SVM.
//! - [`dcnn`]: a small residual CNN with hand-written backward passes.
//! - [`eval`]: confusion matrices, precision/recall/F1 and SNR sweeps.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cwt;
pub mod dataset;
pub mod dcnn;
pub mod eval;
pub mod manifest;
pub mod materials;
pub mod ml;
pub mod noise;
pub mod seed;
pub mod spectrum;

mod math;
mod par;

pub use cwt::{Scalogram, ScalogramImage};
pub use dataset::{Dataset, DatasetPlan, Sample};
pub use manifest::{DatasetManifest, ManifestEntry, Split};
pub use noise::{NoiseConfig, NoisySample, Scenario};
pub use spectrum::Spectrum;
