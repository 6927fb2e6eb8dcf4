//! Labeled dataset manifests.
//!
//! A manifest lists spectra (files on disk or bundled synthetic profiles)
//! together with their class, split and noise parameters. Reading and writing
//! the TOML form lives in the `ramanscope` crate.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

/// Where an entry's spectrum comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    /// A spectrum file in RRUFF text format, relative to the manifest.
    File { path: String },
    /// A bundled synthetic profile and variant number.
    Synthetic { profile: String, variant: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub source: Source,
    pub label: String,
    pub split: Split,
    pub scenario: Scenario,
    /// Target SNR; absent for clean and baseline-only entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub class_names: Vec<String>,
    #[serde(default)]
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifestError {
    #[error("manifest needs at least two classes, found {0}")]
    TooFewClasses(usize),
    #[error("duplicate class name {0:?}")]
    DuplicateClass(String),
    #[error("entry {entry}: {reason}")]
    Schema { entry: usize, reason: String },
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.class_names.len() < 2 {
            return Err(ManifestError::TooFewClasses(self.class_names.len()));
        }
        let mut seen = BTreeSet::new();
        for c in &self.class_names {
            if !seen.insert(c.as_str()) {
                return Err(ManifestError::DuplicateClass(c.clone()));
            }
        }
        let mut ids = BTreeSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            let fail = |reason: String| ManifestError::Schema { entry: i, reason };
            if e.id.is_empty() {
                return Err(fail("empty id".into()));
            }
            if !ids.insert(e.id.as_str()) {
                return Err(fail(format!("duplicate id {:?}", e.id)));
            }
            if self.class_index(&e.label).is_none() {
                return Err(fail(format!("unknown label {:?}", e.label)));
            }
            if let Some(snr) = e.snr_db {
                if !snr.is_finite() {
                    return Err(fail("snr_db must be finite".into()));
                }
            }
            if matches!(e.scenario, Scenario::Gn | Scenario::Gb) && e.snr_db.is_none() {
                return Err(fail(format!("scenario {} requires snr_db", e.scenario.as_str())));
            }
        }
        Ok(())
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == label)
    }

    /// Entry counts per class, in class order.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.class_names.len()];
        for e in &self.entries {
            if let Some(c) = self.class_index(&e.label) {
                counts[c] += 1;
            }
        }
        counts
    }
}

/// Class composition of the RRUFF-derived reference dataset: name, number of
/// original spectra, number of noisy spectra generated from them.
pub const REFERENCE_COMPOSITION: [(&str, usize, usize); 5] = [
    ("Actinolite", 11, 2534),
    ("Albite", 13, 2993),
    ("Forsterite", 13, 2993),
    ("Grossular", 13, 2993),
    ("Marialite", 10, 2381),
];

/// A manifest of clean originals with the reference class composition, backed
/// by the bundled synthetic profiles.
pub fn reference_originals(seed: u64) -> DatasetManifest {
    let mut m = DatasetManifest {
        class_names: REFERENCE_COMPOSITION.iter().map(|c| String::from(c.0)).collect(),
        entries: Vec::new(),
    };
    for &(name, originals, _) in &REFERENCE_COMPOSITION {
        for v in 0..originals {
            m.entries.push(ManifestEntry {
                id: format!("{}-{:02}", name.to_ascii_lowercase(), v),
                source: Source::Synthetic { profile: name.into(), variant: v as u32 },
                label: name.into(),
                split: Split::Train,
                scenario: Scenario::Clean,
                snr_db: None,
                seed,
            });
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_shape() {
        let m = reference_originals(0);
        m.validate().unwrap();
        assert_eq!(m.class_names.len(), 5);
        assert_eq!(m.entries.len(), 60);
        assert_eq!(m.class_counts(), [11, 13, 13, 13, 10]);
        let noisy: usize = REFERENCE_COMPOSITION.iter().map(|c| c.2).sum();
        assert_eq!(noisy, 13_894);
    }

    #[test]
    fn unknown_label_is_reported_with_index() {
        let mut m = reference_originals(0);
        m.entries[7].label = "Quartz".into();
        assert!(matches!(m.validate(), Err(ManifestError::Schema { entry: 7, .. })));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut m = reference_originals(0);
        m.entries[3].id = m.entries[2].id.clone();
        assert!(matches!(m.validate(), Err(ManifestError::Schema { entry: 3, .. })));
    }

    #[test]
    fn needs_two_classes() {
        let m = DatasetManifest { class_names: alloc::vec!["a".into()], entries: Vec::new() };
        assert_eq!(m.validate(), Err(ManifestError::TooFewClasses(1)));
    }
}
