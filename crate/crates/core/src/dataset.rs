//! Augmented train/test sets built from clean originals.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::{DatasetManifest, ManifestEntry, Source, Split};
use crate::noise::{inject, BaselineParams, NoiseConfig, NoiseError, NoisySample, Scenario};
use crate::par;
use crate::seed::{self, Stream};
use crate::spectrum::{resample, Spectrum, SpectrumError, DEFAULT_GRID_LEN};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("class {0:?} has no source spectra")]
    EmptyClass(String),
    #[error("spectrum {source_id:?} has unknown label {label:?}")]
    UnknownLabel { source_id: String, label: String },
    #[error("invalid SNR range ({0}, {1})")]
    InvalidSnrRange(f64, f64),
    #[error("per-class totals have {got} entries, expected {expected}")]
    TotalsLength { got: usize, expected: usize },
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// How many noisy realizations to derive from the originals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Multiplicity {
    /// The same count for every original.
    PerOriginal { train: usize, test: usize },
    /// Exact totals per class (in class order), spread round-robin over that
    /// class's originals.
    PerClass { train: Vec<usize>, test: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetPlan {
    pub scenario: Scenario,
    pub train_snr: (f64, f64),
    pub test_snr: (f64, f64),
    /// Round drawn SNRs to whole dB.
    pub integer_snr: bool,
    pub multiplicity: Multiplicity,
    pub baseline: BaselineParams,
    pub grid_len: usize,
    pub seed: u64,
}

impl Default for DatasetPlan {
    fn default() -> Self {
        Self {
            scenario: Scenario::Gb,
            train_snr: (30.0, 80.0),
            test_snr: (1.0, 30.0),
            integer_snr: false,
            multiplicity: Multiplicity::PerOriginal { train: 20, test: 10 },
            baseline: BaselineParams::default(),
            grid_len: DEFAULT_GRID_LEN,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub label: usize,
    pub split: Split,
    pub original_id: String,
    pub data: NoisySample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub class_names: Vec<String>,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Sample counts per class for one split.
    pub fn class_counts(&self, split: Split) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for s in self.samples.iter().filter(|s| s.split == split) {
            counts[s.label] += 1;
        }
        counts
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.split == split)
    }

    /// Manifest describing every generated sample; sources name the original.
    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            class_names: self.class_names.clone(),
            entries: self
                .samples
                .iter()
                .map(|s| ManifestEntry {
                    id: s.id.clone(),
                    source: Source::File { path: format!("spectra/{}.txt", s.id) },
                    label: self.class_names[s.label].clone(),
                    split: s.split,
                    scenario: s.data.scenario,
                    snr_db: s.data.target_snr_db,
                    seed: s.data.seed,
                })
                .collect(),
        }
    }
}

struct Job {
    original: usize,
    label: usize,
    split: Split,
    index: u64,
}

fn check_range(r: (f64, f64)) -> Result<(), DatasetError> {
    if r.0.is_finite() && r.1.is_finite() && r.0 <= r.1 {
        Ok(())
    } else {
        Err(DatasetError::InvalidSnrRange(r.0, r.1))
    }
}

/// Builds the noisy dataset.
///
/// Every original is resampled to `plan.grid_len` points, then used for both
/// splits: training samples draw their SNR uniformly from `plan.train_snr`,
/// test samples from `plan.test_snr`. Sample `i` is seeded with
/// `seed::derive(plan.seed, i)` so generation order does not matter.
pub fn build_dataset(
    class_names: &[String],
    originals: &[Spectrum],
    plan: &DatasetPlan,
) -> Result<Dataset, DatasetError> {
    check_range(plan.train_snr)?;
    check_range(plan.test_snr)?;
    plan.baseline.validate()?;

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); class_names.len()];
    for (i, s) in originals.iter().enumerate() {
        let label = s.label.as_deref().unwrap_or("");
        let c = class_names.iter().position(|c| c == label).ok_or_else(|| DatasetError::UnknownLabel {
            source_id: s.source_id.clone(),
            label: label.to_string(),
        })?;
        by_class[c].push(i);
    }
    if let Some(c) = by_class.iter().position(|v| v.is_empty()) {
        return Err(DatasetError::EmptyClass(class_names[c].clone()));
    }

    let resampled = originals
        .iter()
        .map(|s| resample(s, plan.grid_len))
        .collect::<Result<Vec<_>, _>>()?;

    let mut jobs = Vec::new();
    for split in [Split::Train, Split::Test] {
        for (label, members) in by_class.iter().enumerate() {
            let total = match &plan.multiplicity {
                Multiplicity::PerOriginal { train, test } => {
                    members.len() * if split == Split::Train { *train } else { *test }
                }
                Multiplicity::PerClass { train, test } => {
                    let v = if split == Split::Train { train } else { test };
                    if v.len() != class_names.len() {
                        return Err(DatasetError::TotalsLength { got: v.len(), expected: class_names.len() });
                    }
                    v[label]
                }
            };
            for r in 0..total {
                jobs.push(Job {
                    original: members[r % members.len()],
                    label,
                    split,
                    index: jobs.len() as u64,
                });
            }
        }
    }

    let generated = par::map_indices(jobs.len(), |j| {
        let job = &jobs[j];
        let sample_seed = seed::derive(plan.seed, job.index);
        let range = if job.split == Split::Train { plan.train_snr } else { plan.test_snr };
        let mut rng = seed::rng(sample_seed, Stream::Snr);
        let mut snr = if range.0 == range.1 { range.0 } else { rng.random_range(range.0..=range.1) };
        if plan.integer_snr {
            snr = crate::math::round(snr);
        }
        let cfg = NoiseConfig { scenario: plan.scenario, snr_db: snr, baseline: plan.baseline, seed: sample_seed };
        inject(&resampled[job.original], &cfg).map(|data| Sample {
            id: format!("{}-{:06}", job.split.as_str(), job.index),
            label: job.label,
            split: job.split,
            original_id: originals[job.original].source_id.clone(),
            data,
        })
    });
    let samples = generated.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset { class_names: class_names.to_vec(), samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{bundled_class_names, BUNDLED};

    fn originals(per_class: u32, grid: usize) -> Vec<Spectrum> {
        BUNDLED
            .iter()
            .flat_map(|m| (0..per_class).map(move |v| m.original(v, 1, grid).unwrap()))
            .collect()
    }

    #[test]
    fn counts_and_snr_bounds() {
        let plan = DatasetPlan {
            multiplicity: Multiplicity::PerOriginal { train: 20, test: 0 },
            grid_len: 256,
            ..Default::default()
        };
        let ds = build_dataset(&bundled_class_names(), &originals(12, 256), &plan).unwrap();
        assert_eq!(ds.samples.len(), 1200);
        assert_eq!(ds.class_counts(Split::Train), [240; 5]);
        for s in &ds.samples {
            let snr = s.data.target_snr_db.unwrap();
            assert!((30.0..=80.0).contains(&snr));
        }
        let plan = DatasetPlan {
            multiplicity: Multiplicity::PerOriginal { train: 0, test: 5 },
            grid_len: 256,
            integer_snr: true,
            ..Default::default()
        };
        let ds = build_dataset(&bundled_class_names(), &originals(2, 256), &plan).unwrap();
        for s in &ds.samples {
            let snr = s.data.target_snr_db.unwrap();
            assert!((1.0..=30.0).contains(&snr));
            assert_eq!(snr, libm::round(snr));
        }
    }

    #[test]
    fn empty_class_rejected() {
        let mut names = bundled_class_names();
        names.push("Quartz".into());
        let err = build_dataset(&names, &originals(1, 64), &DatasetPlan::default()).unwrap_err();
        assert_eq!(err, DatasetError::EmptyClass("Quartz".into()));
    }

    #[test]
    fn deterministic() {
        let plan = DatasetPlan {
            multiplicity: Multiplicity::PerOriginal { train: 2, test: 2 },
            grid_len: 128,
            seed: 99,
            ..Default::default()
        };
        let o = originals(2, 300);
        let a = build_dataset(&bundled_class_names(), &o, &plan).unwrap();
        let b = build_dataset(&bundled_class_names(), &o, &plan).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples[0].data.noisy.len(), 128);
    }
}
