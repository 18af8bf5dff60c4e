//! Background quality metrics for (ground truth, estimate) pairs.
//!
//! AGE, pEPs and pCEPs measure gray-level error; PSNR, MS-SSIM and CQM
//! measure perceptual quality. All six work on frames of equal dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{ColorFrame, GrayFrame};
use crate::imaging::to_gray;

/// Error-pixel threshold used by pEPs/pCEPs.
pub const ERROR_PIXEL_THRESHOLD: u8 = 20;

/// PSNR ceiling: identical images report this instead of infinity.
pub const PSNR_CAP_DB: f64 = 100.0;

/// Luma/chroma weights of the color quality measure.
pub const CQM_LUMA_WEIGHT: f64 = 0.9449;
pub const CQM_CHROMA_WEIGHT: f64 = 0.0551;

/// The six quality scores of one (ground truth, estimate) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Average gray-level error.
    pub age: f64,
    /// Fraction of pixels with gray error above the threshold.
    pub peps: f64,
    /// Fraction of error pixels whose four neighbors are all error pixels.
    pub pceps: f64,
    /// Peak signal-to-noise ratio in dB (grayscale, capped).
    pub psnr: f64,
    /// Multi-scale structural similarity in [0, 1].
    pub ms_ssim: f64,
    /// Color quality measure in dB (YUV-weighted PSNR).
    pub cqm: f64,
}

fn check_dims(gt: &ColorFrame, est: &ColorFrame) -> Result<()> {
    if gt.dims() != est.dims() {
        return Err(Error::dims(gt.dims(), est.dims()));
    }
    Ok(())
}

/// Mean absolute grayscale difference.
pub fn age(gt: &ColorFrame, est: &ColorFrame) -> Result<f64> {
    check_dims(gt, est)?;
    let (a, b) = (to_gray(gt), to_gray(est));
    let sum: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| x.abs_diff(y) as u64)
        .sum();
    Ok(sum as f64 / a.pixels().len() as f64)
}

fn error_pixels(gt: &ColorFrame, est: &ColorFrame, tau: u8) -> (Vec<bool>, usize) {
    let (a, b) = (to_gray(gt), to_gray(est));
    let eps: Vec<bool> = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| x.abs_diff(y) > tau)
        .collect();
    let count = eps.iter().filter(|&&e| e).count();
    (eps, count)
}

/// Fraction of pixels whose gray difference exceeds `tau` (strictly).
pub fn peps(gt: &ColorFrame, est: &ColorFrame, tau: u8) -> Result<f64> {
    check_dims(gt, est)?;
    let (_, count) = error_pixels(gt, est, tau);
    Ok(count as f64 / (gt.width() * gt.height()) as f64)
}

/// Fraction of clustered error pixels: error pixels whose four neighbors are
/// all error pixels. Border pixels lack a neighbor and are never clustered.
pub fn pceps(gt: &ColorFrame, est: &ColorFrame, tau: u8) -> Result<f64> {
    check_dims(gt, est)?;
    let (eps, _) = error_pixels(gt, est, tau);
    let (w, h) = gt.dims();
    let mut count = 0usize;
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let idx = y * w + x;
            if eps[idx] && eps[idx - 1] && eps[idx + 1] && eps[idx - w] && eps[idx + w] {
                count += 1;
            }
        }
    }
    Ok(count as f64 / (w * h) as f64)
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    (10.0 * (255.0f64 * 255.0 / mse).log10()).min(PSNR_CAP_DB)
}

/// Grayscale peak signal-to-noise ratio, capped at [`PSNR_CAP_DB`].
pub fn psnr(gt: &ColorFrame, est: &ColorFrame) -> Result<f64> {
    check_dims(gt, est)?;
    let (a, b) = (to_gray(gt), to_gray(est));
    let sum: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u64;
            d * d
        })
        .sum();
    let mse = sum as f64 / a.pixels().len() as f64;
    Ok(psnr_from_mse(mse))
}

// ---------------------------------------------------------------------------
// MS-SSIM

/// Canonical per-scale exponents.
const MSSSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    fn from_gray(g: &GrayFrame) -> Self {
        Self {
            width: g.width(),
            height: g.height(),
            data: g.pixels().iter().map(|&v| v as f64).collect(),
        }
    }

    /// 2x2 mean pooling (odd trailing row/column dropped).
    fn downsample(&self) -> Plane {
        let w = self.width / 2;
        let h = self.height / 2;
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let i = 2 * y * self.width + 2 * x;
                data.push(
                    (self.data[i]
                        + self.data[i + 1]
                        + self.data[i + self.width]
                        + self.data[i + self.width + 1])
                        / 4.0,
                );
            }
        }
        Plane { width: w, height: h, data }
    }
}

fn ssim_window_kernel() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as i64;
    let mut k = Vec::with_capacity(SSIM_WINDOW);
    for i in -r..=r {
        k.push((-(i * i) as f64 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp());
    }
    let s: f64 = k.iter().sum();
    k.iter().map(|v| v / s).collect()
}

/// Valid-mode separable Gaussian filtering; output is
/// (w - window + 1) x (h - window + 1).
fn filter_valid(p: &Plane, kernel: &[f64]) -> Plane {
    let k = kernel.len();
    let ow = p.width - k + 1;
    let oh = p.height - k + 1;
    // Horizontal.
    let mut tmp = vec![0f64; ow * p.height];
    for y in 0..p.height {
        for x in 0..ow {
            let mut acc = 0.0;
            for (i, &wk) in kernel.iter().enumerate() {
                acc += wk * p.data[y * p.width + x + i];
            }
            tmp[y * ow + x] = acc;
        }
    }
    // Vertical.
    let mut out = vec![0f64; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (i, &wk) in kernel.iter().enumerate() {
                acc += wk * tmp[(y + i) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    Plane {
        width: ow,
        height: oh,
        data: out,
    }
}

fn multiply(a: &Plane, b: &Plane) -> Plane {
    Plane {
        width: a.width,
        height: a.height,
        data: a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect(),
    }
}

/// Mean luminance and contrast-structure terms of one scale.
fn ssim_terms(a: &Plane, b: &Plane, kernel: &[f64]) -> (f64, f64) {
    const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
    const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);
    let mu_a = filter_valid(a, kernel);
    let mu_b = filter_valid(b, kernel);
    let aa = filter_valid(&multiply(a, a), kernel);
    let bb = filter_valid(&multiply(b, b), kernel);
    let ab = filter_valid(&multiply(a, b), kernel);

    let n = mu_a.data.len();
    let mut l_sum = 0.0;
    let mut cs_sum = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a.data[i], mu_b.data[i]);
        let va = aa.data[i] - ma * ma;
        let vb = bb.data[i] - mb * mb;
        let cov = ab.data[i] - ma * mb;
        l_sum += (2.0 * ma * mb + C1) / (ma * ma + mb * mb + C1);
        cs_sum += (2.0 * cov + C2) / (va + vb + C2);
    }
    (l_sum / n as f64, cs_sum / n as f64)
}

/// Number of dyadic scales (up to 5) for which the 11x11 window still fits.
fn msssim_scale_count(width: usize, height: usize) -> usize {
    let mut side = width.min(height);
    let mut k = 0;
    while k < 5 && side >= SSIM_WINDOW {
        k += 1;
        side /= 2;
    }
    k
}

/// Multi-scale structural similarity on grayscale.
///
/// Uses the canonical five-scale exponents with an 11x11 Gaussian window
/// (sigma 1.5) and dyadic downsampling. Images too small for five scales use
/// the largest feasible number of scales with the exponents renormalized to
/// sum to one. Negative means are clamped to zero, so the result stays in
/// [0, 1].
pub fn ms_ssim(gt: &ColorFrame, est: &ColorFrame) -> Result<f64> {
    check_dims(gt, est)?;
    let scales = msssim_scale_count(gt.width(), gt.height());
    if scales == 0 {
        return Err(Error::ImageTooSmallForSsim(gt.width().min(gt.height())));
    }
    let mut weights: Vec<f64> = MSSSIM_WEIGHTS[..scales].to_vec();
    if scales < 5 {
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
    }

    let kernel = ssim_window_kernel();
    let mut a = Plane::from_gray(&to_gray(gt));
    let mut b = Plane::from_gray(&to_gray(est));
    let mut score = 1.0f64;
    for (scale, &weight) in weights.iter().enumerate() {
        let (l_mean, cs_mean) = ssim_terms(&a, &b, &kernel);
        if scale + 1 == weights.len() {
            // Final scale combines luminance and contrast-structure.
            score *= (l_mean.max(0.0) * cs_mean.max(0.0)).powf(weight);
        } else {
            score *= cs_mean.max(0.0).powf(weight);
            a = a.downsample();
            b = b.downsample();
        }
    }
    Ok(score.clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// CQM

/// Full-range BT.601 YUV components of one RGB pixel.
fn yuv(rgb: [u8; 3]) -> [f64; 3] {
    let (r, g, b) = (rgb[0] as f64, rgb[1] as f64, rgb[2] as f64);
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let u = 0.492 * (b - y);
    let v = 0.877 * (r - y);
    [y, u, v]
}

/// Color quality measure: per-channel YUV PSNRs combined with
/// luma weight 0.9449 and chroma weight 0.0551.
pub fn cqm(gt: &ColorFrame, est: &ColorFrame) -> Result<f64> {
    check_dims(gt, est)?;
    let n = (gt.width() * gt.height()) as f64;
    let mut sq = [0f64; 3];
    for (&a, &b) in gt.pixels().iter().zip(est.pixels()) {
        let (ya, yb) = (yuv(a), yuv(b));
        for c in 0..3 {
            let d = ya[c] - yb[c];
            sq[c] += d * d;
        }
    }
    let psnr_y = psnr_from_mse(sq[0] / n);
    let psnr_u = psnr_from_mse(sq[1] / n);
    let psnr_v = psnr_from_mse(sq[2] / n);
    Ok(psnr_y * CQM_LUMA_WEIGHT + (psnr_u + psnr_v) / 2.0 * CQM_CHROMA_WEIGHT)
}

/// Computes all six metrics.
pub fn evaluate(gt: &ColorFrame, est: &ColorFrame) -> Result<MetricReport> {
    Ok(MetricReport {
        age: age(gt, est)?,
        peps: peps(gt, est, ERROR_PIXEL_THRESHOLD)?,
        pceps: pceps(gt, est, ERROR_PIXEL_THRESHOLD)?,
        psnr: psnr(gt, est)?,
        ms_ssim: ms_ssim(gt, est)?,
        cqm: cqm(gt, est)?,
    })
}
