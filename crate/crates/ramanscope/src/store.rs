//! On-disk layouts: manifests, noisy dataset directories and scalogram
//! image stores.
//!
//! A dataset directory holds `manifest.toml`, `samples.csv` and one RRUFF
//! text file per sample under `spectra/`. An image store holds
//! `images.toml` (class names and transform), `images.csv` and one PNG per
//! sample under `png/`.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use ramanscope_core::cwt::TransformConfig;
use ramanscope_core::manifest::{ManifestError, Source};
use ramanscope_core::materials;
use ramanscope_core::noise::Scenario;
use ramanscope_core::spectrum::{resample, SpectrumError};
use ramanscope_core::{Dataset, DatasetManifest, ScalogramImage, Spectrum, Split};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rruff::{self, RruffError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {source}")]
    Manifest { path: String, source: ManifestError },
    #[error(transparent)]
    Rruff(#[from] RruffError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("unknown synthetic profile {0:?}")]
    UnknownProfile(String),
    #[error("{path}: {message}")]
    Image { path: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.display().to_string(), source }
}

fn parse_err(path: &Path, message: impl ToString) -> StoreError {
    StoreError::Parse { path: path.display().to_string(), message: message.to_string() }
}

pub(crate) fn read_text(path: &Path) -> Result<String, StoreError> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest, StoreError> {
    let m: DatasetManifest = toml::from_str(&read_text(path)?).map_err(|e| parse_err(path, e.message()))?;
    m.validate().map_err(|source| StoreError::Manifest { path: path.display().to_string(), source })?;
    Ok(m)
}

pub fn save_manifest(m: &DatasetManifest, path: &Path) -> Result<(), StoreError> {
    m.validate().map_err(|source| StoreError::Manifest { path: path.display().to_string(), source })?;
    let text = toml::to_string(m).map_err(|e| parse_err(path, e))?;
    write_bytes(path, text.as_bytes())
}

/// Loads every entry's spectrum, resampled to `grid_len` points and labelled
/// with the entry's class. File paths are relative to `base`.
pub fn load_originals(m: &DatasetManifest, base: &Path, grid_len: usize) -> Result<Vec<Spectrum>, StoreError> {
    m.entries
        .iter()
        .map(|e| {
            let mut s = match &e.source {
                Source::File { path } => resample(&rruff::read_rruff(&base.join(path))?.spectrum, grid_len)?,
                Source::Synthetic { profile, variant } => materials::find(profile)
                    .ok_or_else(|| StoreError::UnknownProfile(profile.clone()))?
                    .original(*variant, e.seed, grid_len)?,
            };
            s.label = Some(e.label.clone());
            s.source_id = e.id.clone();
            Ok(s)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub id: String,
    pub label: String,
    pub split: Split,
    pub scenario: Scenario,
    pub target_snr_db: Option<f64>,
    pub measured_snr_db: Option<f64>,
    pub seed: u64,
    pub original_id: String,
}

/// Writes a noisy dataset into `dir`, which must not exist yet or be empty.
pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<(), StoreError> {
    save_manifest(&ds.manifest(), &dir.join("manifest.toml"))?;
    let csv_path = dir.join("samples.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| parse_err(&csv_path, e))?;
    for s in &ds.samples {
        let label = &ds.class_names[s.label];
        w.serialize(SampleRow {
            id: s.id.clone(),
            label: label.clone(),
            split: s.split,
            scenario: s.data.scenario,
            target_snr_db: s.data.target_snr_db,
            measured_snr_db: s.data.measured_snr_db,
            seed: s.data.seed,
            original_id: s.original_id.clone(),
        })
        .map_err(|e| parse_err(&csv_path, e))?;
        let mut spectrum = s.data.noisy.clone();
        spectrum.label = Some(label.clone());
        let meta = BTreeMap::from([("SCENARIO".to_string(), s.data.scenario.as_str().to_string())]);
        write_bytes(&dir.join(format!("spectra/{}.txt", s.id)), rruff::write_rruff(&spectrum, &meta).as_bytes())?;
    }
    w.flush().map_err(io_err(&csv_path))
}

/// A dataset directory read back: manifest order is preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredDataset {
    pub class_names: Vec<String>,
    pub rows: Vec<SampleRow>,
    pub spectra: Vec<Spectrum>,
}

pub fn read_dataset(dir: &Path) -> Result<StoredDataset, StoreError> {
    let m = load_manifest(&dir.join("manifest.toml"))?;
    let csv_path = dir.join("samples.csv");
    let mut r = csv::Reader::from_path(&csv_path).map_err(|e| parse_err(&csv_path, e))?;
    let rows: Vec<SampleRow> = r.deserialize().collect::<Result<_, _>>().map_err(|e| parse_err(&csv_path, e))?;
    if rows.len() != m.entries.len() || rows.iter().zip(&m.entries).any(|(r, e)| r.id != e.id) {
        return Err(parse_err(&csv_path, "rows do not match manifest entries"));
    }
    let spectra = m
        .entries
        .iter()
        .map(|e| match &e.source {
            Source::File { path } => Ok(rruff::read_rruff(&dir.join(path))?.spectrum),
            Source::Synthetic { .. } => Err(parse_err(&dir.join("manifest.toml"), "dataset entries must be files")),
        })
        .collect::<Result<_, _>>()?;
    Ok(StoredDataset { class_names: m.class_names, rows, spectra })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageStoreMeta {
    pub class_names: Vec<String>,
    pub scenario: Scenario,
    pub transform: TransformConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRow {
    pub id: String,
    pub label: String,
    pub split: Split,
    pub snr_db: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageStore {
    pub meta: ImageStoreMeta,
    pub rows: Vec<ImageRow>,
    pub images: Vec<ScalogramImage>,
}

impl ImageStore {
    pub fn label_index(&self, row: &ImageRow) -> Option<usize> {
        self.meta.class_names.iter().position(|c| *c == row.label)
    }

    /// Images and class indices of one split.
    pub fn split(&self, split: Split) -> (Vec<ScalogramImage>, Vec<usize>) {
        self.rows
            .iter()
            .zip(&self.images)
            .filter(|(r, _)| r.split == split)
            .map(|(r, img)| (img.clone(), self.label_index(r).expect("validated on read")))
            .unzip()
    }
}

pub fn write_png(img: &ScalogramImage, path: &Path) -> Result<(), StoreError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = fs::File::create(path).map_err(io_err(path))?;
    let side = img.side() as u32;
    let mut enc = png::Encoder::new(BufWriter::new(file), side, side);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let image_err = |e: png::EncodingError| StoreError::Image { path: path.display().to_string(), message: e.to_string() };
    let mut w = enc.write_header().map_err(image_err)?;
    w.write_image_data(img.pixels()).map_err(image_err)?;
    w.finish().map_err(image_err)
}

pub fn read_png(path: &Path) -> Result<ScalogramImage, StoreError> {
    let image_err = |message: String| StoreError::Image { path: path.display().to_string(), message };
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut dec = png::Decoder::new(std::io::BufReader::new(file)).read_info().map_err(|e| image_err(e.to_string()))?;
    let mut buf = vec![0; dec.output_buffer_size().ok_or_else(|| image_err("image too large".into()))?];
    let info = dec.next_frame(&mut buf).map_err(|e| image_err(e.to_string()))?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight || info.width != info.height {
        return Err(image_err("expected a square 8-bit RGB image".into()));
    }
    buf.truncate(info.buffer_size());
    Ok(ScalogramImage::new(info.width as usize, buf))
}

pub fn write_images(store: &ImageStore, dir: &Path) -> Result<(), StoreError> {
    let meta_path = dir.join("images.toml");
    write_bytes(&meta_path, toml::to_string(&store.meta).map_err(|e| parse_err(&meta_path, e))?.as_bytes())?;
    let csv_path = dir.join("images.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| parse_err(&csv_path, e))?;
    for (row, img) in store.rows.iter().zip(&store.images) {
        w.serialize(row).map_err(|e| parse_err(&csv_path, e))?;
        write_png(img, &dir.join(format!("png/{}.png", row.id)))?;
    }
    w.flush().map_err(io_err(&csv_path))
}

pub fn read_images(dir: &Path) -> Result<ImageStore, StoreError> {
    let meta_path = dir.join("images.toml");
    let meta: ImageStoreMeta = toml::from_str(&read_text(&meta_path)?).map_err(|e| parse_err(&meta_path, e.message()))?;
    let csv_path = dir.join("images.csv");
    let mut r = csv::Reader::from_path(&csv_path).map_err(|e| parse_err(&csv_path, e))?;
    let rows: Vec<ImageRow> = r.deserialize().collect::<Result<_, _>>().map_err(|e| parse_err(&csv_path, e))?;
    let mut images = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if !meta.class_names.contains(&row.label) {
            return Err(parse_err(&csv_path, format!("row {i}: unknown label {:?}", row.label)));
        }
        let img = read_png(&dir.join(format!("png/{}.png", row.id)))?;
        if img.side() != meta.transform.side {
            return Err(parse_err(&csv_path, format!("row {i}: image side {} != {}", img.side(), meta.transform.side)));
        }
        images.push(img);
    }
    Ok(ImageStore { meta, rows, images })
}

/// Every regular file below `dir` in sorted relative-path order.
pub fn files_sorted(dir: &Path) -> Result<Vec<PathBuf>, StoreError> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(io_err(&d))? {
            let p = entry.map_err(io_err(&d))?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ramanscope_core::manifest::{reference_originals, ManifestEntry};

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = reference_originals(3);
        let p = dir.path().join("m.toml");
        save_manifest(&m, &p).unwrap();
        assert_eq!(load_manifest(&p).unwrap(), m);
    }

    #[test]
    fn unknown_label_names_entry() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = reference_originals(0);
        m.entries[7] = ManifestEntry { label: "Quartz".into(), ..m.entries[7].clone() };
        let p = dir.path().join("m.toml");
        fs::write(&p, toml::to_string(&m).unwrap()).unwrap();
        match load_manifest(&p) {
            Err(StoreError::Manifest { source: ManifestError::Schema { entry, .. }, .. }) => assert_eq!(entry, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pixels: Vec<u8> = (0..5 * 5 * 3).map(|i| (i * 7 % 256) as u8).collect();
        let img = ScalogramImage::new(5, pixels);
        let p = dir.path().join("a/b.png");
        write_png(&img, &p).unwrap();
        assert_eq!(read_png(&p).unwrap(), img);
    }
}
