//! Color conversion, histograms, equalization and Gaussian smoothing.

use crate::error::{Error, Result};
use crate::frame::{ColorFrame, GrayFrame, GrayFrameF32};

/// A 256-bin intensity histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram256 {
    bins: [u64; 256],
}

impl Histogram256 {
    pub fn from_bins(bins: [u64; 256]) -> Self {
        Self { bins }
    }

    #[inline]
    pub fn bins(&self) -> &[u64; 256] {
        &self.bins
    }

    #[inline]
    pub fn bin(&self, value: u8) -> u64 {
        self.bins[value as usize]
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    /// Multiplies every bin by a constant (useful for scale-invariance checks).
    pub fn scaled(&self, factor: u64) -> Self {
        let mut bins = self.bins;
        for b in &mut bins {
            *b *= factor;
        }
        Self { bins }
    }
}

/// BT.601 luma: round(0.299 R + 0.587 G + 0.114 B).
#[inline]
pub fn luma(rgb: [u8; 3]) -> u8 {
    let y = 0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64;
    (y + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Converts a color frame to grayscale (BT.601 luma).
pub fn to_gray(frame: &ColorFrame) -> GrayFrame {
    let pixels = frame.pixels().iter().map(|&p| luma(p)).collect();
    GrayFrame::new(frame.width(), frame.height(), pixels).expect("dimensions preserved")
}

/// Extracts the HSV value channel: V = max(R, G, B).
pub fn to_hsv_value_channel(frame: &ColorFrame) -> GrayFrame {
    let pixels = frame
        .pixels()
        .iter()
        .map(|&[r, g, b]| r.max(g).max(b))
        .collect();
    GrayFrame::new(frame.width(), frame.height(), pixels).expect("dimensions preserved")
}

/// Counts intensities into 256 bins.
pub fn histogram(gray: &GrayFrame) -> Histogram256 {
    let mut bins = [0u64; 256];
    for &v in gray.pixels() {
        bins[v as usize] += 1;
    }
    Histogram256 { bins }
}

/// Histogram equalization via cumulative-distribution remap.
///
/// The remap is `v -> floor(cdf(v) * 255)`, so a constant frame maps to a
/// constant frame and the intensity order of pixels is preserved.
pub fn equalize(gray: &GrayFrame) -> GrayFrame {
    let hist = histogram(gray);
    let total = hist.total() as f64;
    let mut lut = [0u8; 256];
    let mut cumulative = 0u64;
    for (v, slot) in lut.iter_mut().enumerate() {
        cumulative += hist.bins[v];
        *slot = ((cumulative as f64 / total) * 255.0).floor() as u8;
    }
    let pixels = gray.pixels().iter().map(|&v| lut[v as usize]).collect();
    GrayFrame::new(gray.width(), gray.height(), pixels).expect("dimensions preserved")
}

/// Builds a normalized 1-D Gaussian kernel truncated at `radius`.
fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    for k in -(radius as i64)..=(radius as i64) {
        let x = k as f64;
        kernel.push((-x * x / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= sum;
    }
    kernel
}

/// Separable Gaussian smoothing with clamp-to-edge borders.
///
/// Returns a real-valued frame; quantize with [`GrayFrameF32::to_u8`] when an
/// 8-bit result is needed.
pub fn gaussian_blur(gray: &GrayFrame, sigma: f64, radius: usize) -> Result<GrayFrameF32> {
    if sigma <= 0.0 {
        return Err(Error::InvalidParam(format!("sigma must be > 0, got {sigma}")));
    }
    if radius == 0 {
        return Err(Error::InvalidParam("radius must be >= 1".into()));
    }
    let (w, h) = gray.dims();
    let kernel = gaussian_kernel(sigma, radius);
    let r = radius as i64;

    // Horizontal pass.
    let mut tmp = vec![0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, &wk) in kernel.iter().enumerate() {
                let sx = (x as i64 + i as i64 - r).clamp(0, w as i64 - 1) as usize;
                acc += wk * gray.pixel(sx, y) as f64;
            }
            tmp[y * w + x] = acc;
        }
    }

    // Vertical pass.
    let mut out = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, &wk) in kernel.iter().enumerate() {
                let sy = (y as i64 + i as i64 - r).clamp(0, h as i64 - 1) as usize;
                acc += wk * tmp[sy * w + x];
            }
            out[y * w + x] = acc as f32;
        }
    }
    GrayFrameF32::new(w, h, out)
}
