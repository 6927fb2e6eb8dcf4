//! Scalogram rasterization.
//!
//! `|X|` → `log1p` → per-image min-max to `[0, 1]` → 256-entry colormap →
//! bilinear resize to `side × side`. Row 0 of the image is the smallest scale.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{CwtError, Scalogram, JET};
use crate::math;

/// Default image side for desk-scale runs.
pub const DEFAULT_SIDE: usize = 64;

/// An 8-bit RGB image, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalogramImage {
    side: usize,
    pixels: Vec<u8>,
}

impl ScalogramImage {
    pub fn new(side: usize, pixels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), side * side * 3, "pixel buffer shape");
        Self { side, pixels }
    }

    pub fn filled(side: usize, rgb: [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(side * side * 3);
        for _ in 0..side * side {
            pixels.extend_from_slice(&rgb);
        }
        Self { side, pixels }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.side + col) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Channel-planar `[0, 1]` values (`3 × side × side`), the CNN input layout.
    pub fn to_planar(&self) -> Vec<f64> {
        let n = self.side * self.side;
        let mut out = vec![0.0; 3 * n];
        for (p, rgb) in self.pixels.chunks_exact(3).enumerate() {
            for c in 0..3 {
                out[c * n + p] = rgb[c] as f64 / 255.0;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutcome {
    pub image: ScalogramImage,
    /// Every magnitude was equal; the image is the mid-colormap colour.
    pub degenerate: bool,
}

/// `log1p(|X|)` min-max normalized to `[0, 1]`, row-major over
/// (scale, shift). The flag is set when the range is empty, in which case all
/// values are 0.5.
pub fn log_normalized(sc: &Scalogram) -> (Vec<f64>, bool) {
    let mut v: Vec<f64> = sc.coefficients().iter().map(|c| math::ln_1p(c.norm())).collect();
    let (lo, hi) = crate::spectrum::min_max(&v);
    if !(hi > lo) {
        v.iter_mut().for_each(|x| *x = 0.5);
        return (v, true);
    }
    let span = hi - lo;
    for x in &mut v {
        *x = (*x - lo) / span;
    }
    (v, false)
}

/// Bilinear resampling of a `rows × cols` interleaved image with `channels`
/// channels, using pixel-centre alignment and edge clamping.
pub fn resize_bilinear(
    src: &[f64],
    rows: usize,
    cols: usize,
    channels: usize,
    out_rows: usize,
    out_cols: usize,
) -> Vec<f64> {
    let coord = |dst: usize, src_len: usize, dst_len: usize| -> (usize, usize, f64) {
        let f = ((dst as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5).clamp(0.0, (src_len - 1) as f64);
        let i0 = math::floor(f) as usize;
        let i1 = (i0 + 1).min(src_len - 1);
        (i0, i1, f - i0 as f64)
    };
    let mut out = vec![0.0; out_rows * out_cols * channels];
    for r in 0..out_rows {
        let (r0, r1, fr) = coord(r, rows, out_rows);
        for c in 0..out_cols {
            let (c0, c1, fc) = coord(c, cols, out_cols);
            for ch in 0..channels {
                let at = |rr: usize, cc: usize| src[(rr * cols + cc) * channels + ch];
                let top = at(r0, c0) * (1.0 - fc) + at(r0, c1) * fc;
                let bottom = at(r1, c0) * (1.0 - fc) + at(r1, c1) * fc;
                out[(r * out_cols + c) * channels + ch] = top * (1.0 - fr) + bottom * fr;
            }
        }
    }
    out
}

/// Renders with an explicit colormap.
pub fn render_with(sc: &Scalogram, side: usize, colormap: &[[u8; 3]; 256]) -> Result<RenderOutcome, CwtError> {
    if side < 16 {
        return Err(CwtError::SideTooSmall(side));
    }
    let (norm, degenerate) = log_normalized(sc);
    if degenerate {
        log::warn!("scalogram {:?} has constant magnitude; emitting a flat image", sc.source_id);
        return Ok(RenderOutcome { image: ScalogramImage::filled(side, colormap[128]), degenerate });
    }
    let mut rgb = Vec::with_capacity(norm.len() * 3);
    for v in &norm {
        let idx = math::round(v * 255.0) as usize;
        rgb.extend(colormap[idx.min(255)].iter().map(|&b| b as f64));
    }
    let resized = resize_bilinear(&rgb, sc.scales().len(), sc.len(), 3, side, side);
    let pixels = resized.iter().map(|&v| math::round(v).clamp(0.0, 255.0) as u8).collect();
    Ok(RenderOutcome { image: ScalogramImage::new(side, pixels), degenerate })
}

/// Renders with the bundled jet colormap.
pub fn render(sc: &Scalogram, side: usize) -> Result<RenderOutcome, CwtError> {
    render_with(sc, side, &JET)
}
