//! Run configuration: a TOML file where every field has a default.
//!
//! ```toml
//! seed = 0
//!
//! [paths]
//! originals = "originals/manifest.toml"   # bundled profiles when absent
//! out_dir = "out"
//!
//! [spectra]
//! grid_len = 1024
//! originals_per_class = 5
//!
//! [noise]
//! scenario = "gb"
//! train_snr = [30.0, 80.0]
//! test_snr = [10.0, 30.0]
//! train_per_class = 150
//! test_per_class = 60
//!
//! [transform]
//! side = 64
//!
//! [ml.knn]
//! k = 5
//!
//! [dcnn]
//! epochs = 30
//!
//! [sweep]
//! snr_min = 0.0
//! snr_max = 30.0
//! step = 5.0
//! per_class = 20
//! ```

use std::path::{Path, PathBuf};

use ramanscope_core::cwt::TransformConfig;
use ramanscope_core::dataset::{DatasetPlan, Multiplicity};
use ramanscope_core::dcnn::DcnnConfig;
use ramanscope_core::ml::MlParams;
use ramanscope_core::noise::{BaselineParams, Scenario};
use ramanscope_core::spectrum::{DEFAULT_GRID_LEN, MIN_POINTS};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Manifest of clean originals; the bundled synthetic profiles when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub originals: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self { originals: None, out_dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectraConfig {
    pub grid_len: usize,
    /// Variants per bundled profile; unused with an originals manifest.
    pub originals_per_class: u32,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        Self { grid_len: DEFAULT_GRID_LEN, originals_per_class: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub scenario: Scenario,
    pub train_snr: (f64, f64),
    pub test_snr: (f64, f64),
    pub integer_snr: bool,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub baseline: BaselineParams,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            scenario: Scenario::Gb,
            train_snr: (30.0, 80.0),
            test_snr: (10.0, 30.0),
            integer_snr: false,
            train_per_class: 150,
            test_per_class: 60,
            baseline: BaselineParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub snr_min: f64,
    pub snr_max: f64,
    pub step: f64,
    /// Test samples per class at each SNR point.
    pub per_class: usize,
    /// Accuracy levels for the threshold table.
    pub levels: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { snr_min: 0.0, snr_max: 30.0, step: 5.0, per_class: 20, levels: vec![0.8, 0.9] }
    }
}

impl SweepConfig {
    /// `snr_min, snr_min + step, ...` up to and including `snr_max`.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.snr_max - self.snr_min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.snr_min + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for dataset generation. `ml.rf.seed` and `dcnn.seed` are
    /// separate; `--seed` sets all three.
    pub seed: u64,
    pub paths: PathsConfig,
    pub spectra: SpectraConfig,
    pub noise: NoiseSection,
    pub transform: TransformConfig,
    pub ml: MlParams,
    pub dcnn: DcnnConfig,
    pub sweep: SweepConfig,
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub scenario: Option<Scenario>,
    pub snr_min: Option<f64>,
    pub snr_max: Option<f64>,
    pub image_side: Option<usize>,
}

/// Which range `--snr-min/--snr-max` adjust.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrTarget {
    TestSet,
    Sweep,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text).map_err(|message| ConfigError::Parse { path: path.display().to_string(), message })
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides, snr: SnrTarget) {
        if let Some(seed) = o.seed {
            self.seed = seed;
            self.ml.rf.seed = seed;
            self.dcnn.seed = seed;
        }
        if let Some(dir) = &o.out_dir {
            self.paths.out_dir = dir.clone();
        }
        if let Some(s) = o.scenario {
            self.noise.scenario = s;
        }
        if let Some(side) = o.image_side {
            self.transform.side = side;
            self.dcnn.input_side = side;
        }
        let (lo, hi) = match snr {
            SnrTarget::TestSet => (&mut self.noise.test_snr.0, &mut self.noise.test_snr.1),
            SnrTarget::Sweep => (&mut self.sweep.snr_min, &mut self.sweep.snr_max),
        };
        if let Some(v) = o.snr_min {
            *lo = v;
        }
        if let Some(v) = o.snr_max {
            *hi = v;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.spectra.grid_len < MIN_POINTS {
            return bad("spectra.grid_len must be at least 16");
        }
        if self.spectra.originals_per_class == 0 {
            return bad("spectra.originals_per_class must be positive");
        }
        for (name, (lo, hi)) in [("noise.train_snr", self.noise.train_snr), ("noise.test_snr", self.noise.test_snr)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(ConfigError::Invalid(format!("{name} must be an ascending finite range")));
            }
        }
        if self.noise.train_per_class == 0 || self.noise.test_per_class == 0 {
            return bad("noise per-class counts must be positive");
        }
        if self.transform.side < 4 || self.transform.n_scales < 2 {
            return bad("transform.side must be >= 4 and transform.n_scales >= 2");
        }
        if self.dcnn.input_side != self.transform.side {
            return bad("dcnn.input_side must equal transform.side");
        }
        self.dcnn.shape_plan().map_err(|e| ConfigError::Invalid(format!("dcnn: {e}")))?;
        let s = &self.sweep;
        if !(s.snr_min.is_finite() && s.snr_max.is_finite() && s.snr_min < s.snr_max && s.step > 0.0) {
            return bad("sweep needs snr_min < snr_max and step > 0");
        }
        if s.points().len() < 2 || s.per_class == 0 {
            return bad("sweep needs at least two SNR points and per_class > 0");
        }
        if s.levels.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return bad("sweep.levels must lie in [0, 1]");
        }
        Ok(())
    }

    /// Dataset plan for synth: exact per-class totals over however many
    /// originals each class has.
    pub fn dataset_plan(&self, n_classes: usize) -> DatasetPlan {
        DatasetPlan {
            scenario: self.noise.scenario,
            train_snr: self.noise.train_snr,
            test_snr: self.noise.test_snr,
            integer_snr: self.noise.integer_snr,
            multiplicity: Multiplicity::PerClass {
                train: vec![self.noise.train_per_class; n_classes],
                test: vec![self.noise.test_per_class; n_classes],
            },
            baseline: self.noise.baseline,
            grid_len: self.spectra.grid_len,
            seed: self.seed,
        }
    }

    /// The config with machine-specific paths removed, as hashed into run ids.
    fn portable(&self) -> RunConfig {
        RunConfig { paths: PathsConfig { originals: None, out_dir: PathBuf::new() }, ..self.clone() }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// First 12 hex digits of a SHA-256 over the command, the resolved config
/// (without paths) and the digests of the inputs.
pub fn run_id(command: &str, cfg: &RunConfig, input_digests: &[String]) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(cfg.portable().to_toml().as_bytes());
    for d in input_digests {
        h.update([0]);
        h.update(d.as_bytes());
    }
    h.finalize().iter().take(6).map(|b| format!("{b:02x}")).collect()
}
