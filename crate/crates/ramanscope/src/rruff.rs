//! RRUFF spectrum text files.
//!
//! `##KEY=VALUE` header lines, then one `x, y` pair per line (comma or
//! whitespace separated). The class label comes from `##NAMES`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ramanscope_core::spectrum::{SpectrumError, MIN_POINTS};
use ramanscope_core::Spectrum;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RruffError {
    #[error("line {0}: expected two numbers")]
    MalformedLine(usize),
    #[error("only {0} data points, need at least {MIN_POINTS}")]
    TooShort(usize),
    #[error("line {0}: non-finite value")]
    NonFinite(usize),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// A parsed file: the spectrum plus every header.
#[derive(Debug, Clone, PartialEq)]
pub struct RruffFile {
    pub spectrum: Spectrum,
    pub metadata: BTreeMap<String, String>,
    /// Wavenumbers that appeared more than once; only the first row was kept.
    pub duplicates: Vec<f64>,
}

fn split_pair(line: &str) -> Option<(&str, &str)> {
    let mut parts = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty());
    let x = parts.next()?;
    let y = parts.next()?;
    parts.next().is_none().then_some((x, y))
}

pub fn parse_rruff(text: &str, source_id: &str) -> Result<RruffFile, RruffError> {
    let mut metadata = BTreeMap::new();
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix("##") {
            let (k, v) = meta.split_once('=').unwrap_or((meta, ""));
            metadata.entry(k.trim().to_string()).or_insert_with(|| v.trim().to_string());
            continue;
        }
        let (xs, ys) = split_pair(line).ok_or(RruffError::MalformedLine(line_no))?;
        let x: f64 = xs.parse().map_err(|_| RruffError::MalformedLine(line_no))?;
        let y: f64 = ys.parse().map_err(|_| RruffError::MalformedLine(line_no))?;
        if !x.is_finite() || !y.is_finite() {
            return Err(RruffError::NonFinite(line_no));
        }
        rows.push((x, y));
    }

    // Stable sort keeps the first of any duplicated wavenumbers in front.
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut duplicates = Vec::new();
    rows.dedup_by(|later, first| {
        let dup = later.0 == first.0;
        if dup {
            duplicates.push(later.0);
        }
        dup
    });
    if !duplicates.is_empty() {
        log::warn!("{source_id}: {} duplicated wavenumbers, kept first occurrence", duplicates.len());
    }
    if rows.len() < MIN_POINTS {
        return Err(RruffError::TooShort(rows.len()));
    }
    let label = metadata.get("NAMES").filter(|v| !v.is_empty()).cloned();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let spectrum = Spectrum::new(xs, ys, label, source_id.to_string())?;
    Ok(RruffFile { spectrum, metadata, duplicates })
}

pub fn read_rruff(path: &Path) -> Result<RruffFile, RruffError> {
    let text = std::fs::read_to_string(path).map_err(|source| RruffError::Io { path: path.display().to_string(), source })?;
    parse_rruff(&text, &path.display().to_string())
}

/// Serializes with shortest round-trip float formatting, so parsing the
/// output gives back the same values.
pub fn write_rruff(spectrum: &Spectrum, extra: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    if let Some(label) = &spectrum.label {
        let _ = writeln!(out, "##NAMES={label}");
    }
    for (k, v) in extra {
        if k != "NAMES" && k != "END" {
            let _ = writeln!(out, "##{k}={v}");
        }
    }
    for (x, y) in spectrum.wavenumbers().iter().zip(spectrum.intensities()) {
        let _ = writeln!(out, "{x:?}, {y:?}");
    }
    out.push_str("##END=\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> String {
        let mut s = String::from("##NAMES=Actinolite\n##RRUFFID=R000000\n");
        for i in 0..n {
            s.push_str(&format!("{}, {}\n", 100 + i, (i % 5) as f64 + 0.5));
        }
        s
    }

    #[test]
    fn label_and_points() {
        let f = parse_rruff(&sample(20), "t").unwrap();
        assert_eq!(f.spectrum.label.as_deref(), Some("Actinolite"));
        assert_eq!(f.spectrum.len(), 20);
        assert_eq!(f.metadata["RRUFFID"], "R000000");
    }

    #[test]
    fn whitespace_separated_and_unsorted() {
        let mut text = String::new();
        for i in (0..16).rev() {
            text.push_str(&format!("{}\t{}\n", i as f64 * 2.0, i));
        }
        let f = parse_rruff(&text, "t").unwrap();
        assert_eq!(f.spectrum.wavenumbers()[0], 0.0);
        assert_eq!(f.spectrum.label, None);
    }

    #[test]
    fn duplicates_keep_first() {
        let mut text = sample(20);
        text.push_str("105, 99.0\n");
        let f = parse_rruff(&text, "t").unwrap();
        assert_eq!(f.duplicates, vec![105.0]);
        assert_eq!(f.spectrum.intensities()[5], 0.5);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_rruff("##NAMES=x\n1, 2\nfoo, 3\n", "t"), Err(RruffError::MalformedLine(3))));
        assert!(matches!(parse_rruff("1, 2, 3\n", "t"), Err(RruffError::MalformedLine(1))));
        assert!(matches!(parse_rruff(&sample(15), "t"), Err(RruffError::TooShort(15))));
        let mut nan = sample(20);
        nan.push_str("200, NaN\n");
        assert!(matches!(parse_rruff(&nan, "t"), Err(RruffError::NonFinite(23))));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let f = parse_rruff(&sample(30), "t").unwrap();
        let again = parse_rruff(&write_rruff(&f.spectrum, &f.metadata), "t").unwrap();
        assert_eq!(again.spectrum, f.spectrum);
        assert_eq!(again.metadata.get("RRUFFID"), f.metadata.get("RRUFFID"));
    }
}
