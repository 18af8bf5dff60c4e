//! Frame-difference motion masks, lifted from pixel level to superpixel level.
//!
//! The per-frame chain is: absolute grayscale difference against the previous
//! frame, Gaussian smoothing, automatic binarization with an Otsu threshold,
//! then dilation of the pixel mask to whole superpixels (a region with any
//! moving pixel is moving everywhere).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{GrayFrame, GrayFrameF32};
use crate::imaging::{gaussian_blur, histogram};
use crate::slic::SuperpixelLabeling;

/// Per-frame binary motion mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotionMask {
    width: usize,
    height: usize,
    moving: Vec<bool>,
    /// Index of the frame within the selected subsequence.
    pub frame_index: usize,
}

impl MotionMask {
    pub fn new(width: usize, height: usize, moving: Vec<bool>, frame_index: usize) -> Result<Self> {
        if moving.len() != width * height {
            return Err(Error::InvalidParam(format!(
                "mask buffer length {} does not match {width}x{height}",
                moving.len()
            )));
        }
        Ok(Self {
            width,
            height,
            moving,
            frame_index,
        })
    }

    pub fn all_still(width: usize, height: usize, frame_index: usize) -> Self {
        Self {
            width,
            height,
            moving: vec![false; width * height],
            frame_index,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn is_moving(&self, x: usize, y: usize) -> bool {
        self.moving[y * self.width + x]
    }

    #[inline]
    pub fn moving(&self) -> &[bool] {
        &self.moving
    }

    pub fn moving_count(&self) -> usize {
        self.moving.iter().filter(|&&m| m).count()
    }
}

/// An Otsu binarization threshold and the between-class variance it attains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsuResult {
    /// Threshold g: intensities >= g form the "moving" class.
    pub threshold: u8,
    pub between_class_variance: f64,
}

/// Tuning knobs for mask generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionParams {
    /// Gaussian smoothing of the difference image.
    pub blur_sigma: f64,
    pub blur_radius: usize,
    /// Below this between-class variance the scene is considered static.
    pub static_variance_floor: f64,
    /// Below this max smoothed difference the scene is considered static.
    pub static_diff_floor: u8,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            blur_sigma: 1.0,
            blur_radius: 2,
            static_variance_floor: 1.0,
            static_diff_floor: 4,
        }
    }
}

impl MotionParams {
    pub fn validate(&self) -> Result<()> {
        if self.blur_sigma <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "blur_sigma must be > 0, got {}",
                self.blur_sigma
            )));
        }
        if self.blur_radius == 0 {
            return Err(Error::InvalidParam("blur_radius must be >= 1".into()));
        }
        if self.static_variance_floor < 0.0 {
            return Err(Error::InvalidParam(
                "static_variance_floor must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Per-pixel absolute difference |cur - prev|.
pub fn frame_difference(cur: &GrayFrame, prev: &GrayFrame) -> Result<GrayFrame> {
    if cur.dims() != prev.dims() {
        return Err(Error::dims(cur.dims(), prev.dims()));
    }
    let pixels = cur
        .pixels()
        .iter()
        .zip(prev.pixels())
        .map(|(&a, &b)| a.abs_diff(b))
        .collect();
    GrayFrame::new(cur.width(), cur.height(), pixels)
}

/// Frames with at most this many pixels use exact integer comparison when
/// ranking thresholds; larger frames fall back to f64. The exact path keeps
/// the variance comparison overflow-free in u128 up to this size.
const OTSU_EXACT_PIXEL_LIMIT: u64 = 700_000;

/// Exact comparison of between-class variances for thresholds of one
/// histogram. With n0/n1 the class populations and s0/s1 the class intensity
/// sums, the variance is proportional to (s0*n1 - s1*n0)^2 / (n0*n1), so two
/// thresholds compare by cross-multiplying in u128.
#[derive(Clone, Copy, PartialEq, Eq)]
struct ExactVariance {
    numerator: u128,
    denominator: u128, // zero iff a class is empty (variance is zero)
}

impl ExactVariance {
    fn zero() -> Self {
        Self {
            numerator: 0,
            denominator: 0,
        }
    }

    fn compute(n0: u64, s0: u64, n: u64, s: u64) -> Self {
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            return Self::zero();
        }
        let s1 = s - s0;
        let a = (s0 as i128) * (n1 as i128) - (s1 as i128) * (n0 as i128);
        Self {
            numerator: a.unsigned_abs().pow(2),
            denominator: (n0 as u128) * (n1 as u128),
        }
    }

    fn gt(&self, other: &Self) -> bool {
        match (self.denominator, other.denominator) {
            (0, 0) => false,
            (0, _) => false, // zero never beats a real variance (numerator can be 0 too)
            (_, 0) => self.numerator > 0,
            (d1, d2) => self.numerator * d2 > other.numerator * d1,
        }
    }

    fn as_f64(&self, total: u64) -> f64 {
        if self.denominator == 0 {
            return 0.0;
        }
        self.numerator as f64 / (self.denominator as f64 * (total as f64) * (total as f64))
    }
}

/// Finds the threshold maximizing the between-class variance (equivalently,
/// minimizing the intra-class variance), splitting intensities into
/// {v < g} and {v >= g}. Ties break to the smallest g.
pub fn otsu_threshold(gray: &GrayFrame) -> OtsuResult {
    let hist = histogram(gray);
    let total: u64 = hist.total();
    let total_sum: u64 = hist
        .bins()
        .iter()
        .enumerate()
        .map(|(v, &c)| v as u64 * c)
        .sum();

    if total <= OTSU_EXACT_PIXEL_LIMIT {
        let mut best_g = 0u8;
        let mut best = ExactVariance::zero();
        let mut n0 = 0u64;
        let mut s0 = 0u64;
        for g in 0..=255u16 {
            // Class 0 is {v < g}: accumulate bin g-1 when moving to threshold g.
            if g > 0 {
                let v = (g - 1) as usize;
                n0 += hist.bins()[v];
                s0 += (v as u64) * hist.bins()[v];
            }
            let var = ExactVariance::compute(n0, s0, total, total_sum);
            if var.gt(&best) {
                best = var;
                best_g = g as u8;
            }
        }
        OtsuResult {
            threshold: best_g,
            between_class_variance: best.as_f64(total),
        }
    } else {
        let mut best_g = 0u8;
        let mut best = 0.0f64;
        let mut n0 = 0u64;
        let mut s0 = 0u64;
        for g in 0..=255u16 {
            if g > 0 {
                let v = (g - 1) as usize;
                n0 += hist.bins()[v];
                s0 += (v as u64) * hist.bins()[v];
            }
            let n1 = total - n0;
            if n0 == 0 || n1 == 0 {
                continue;
            }
            let s1 = total_sum - s0;
            let m0 = s0 as f64 / n0 as f64;
            let m1 = s1 as f64 / n1 as f64;
            let var = (n0 as f64) * (n1 as f64) * (m0 - m1) * (m0 - m1)
                / ((total as f64) * (total as f64));
            if var > best {
                best = var;
                best_g = g as u8;
            }
        }
        OtsuResult {
            threshold: best_g,
            between_class_variance: best,
        }
    }
}

/// Thresholds the smoothed difference: a pixel moves iff its value >= tau.
pub fn pixel_motion_mask(diff_smoothed: &GrayFrame, tau_opt: u8, frame_index: usize) -> MotionMask {
    let moving = diff_smoothed.pixels().iter().map(|&d| d >= tau_opt).collect();
    MotionMask {
        width: diff_smoothed.width(),
        height: diff_smoothed.height(),
        moving,
        frame_index,
    }
}

/// Dilates a pixel mask to whole superpixels: every region containing at
/// least one moving pixel becomes moving everywhere.
pub fn superpixel_motion_mask(
    pixel_mask: &MotionMask,
    labeling: &SuperpixelLabeling,
) -> Result<MotionMask> {
    if pixel_mask.dims() != labeling.dims() {
        return Err(Error::dims(pixel_mask.dims(), labeling.dims()));
    }
    let mut region_moving = vec![false; labeling.region_count()];
    for (&m, &l) in pixel_mask.moving.iter().zip(labeling.labels()) {
        if m {
            region_moving[l as usize] = true;
        }
    }
    let moving = labeling
        .labels()
        .iter()
        .map(|&l| region_moving[l as usize])
        .collect();
    Ok(MotionMask {
        width: pixel_mask.width,
        height: pixel_mask.height,
        moving,
        frame_index: pixel_mask.frame_index,
    })
}

/// Smoothed absolute difference between two gray frames, quantized to 8 bits.
fn smoothed_difference(
    cur: &GrayFrame,
    prev: &GrayFrame,
    params: &MotionParams,
) -> Result<GrayFrame> {
    let diff = frame_difference(cur, prev)?;
    let blurred: GrayFrameF32 = gaussian_blur(&diff, params.blur_sigma, params.blur_radius)?;
    Ok(blurred.to_u8())
}

/// Mask for one frame given its predecessor, with the static-scene guard: if
/// the smoothed difference never reaches `static_diff_floor`, or Otsu cannot
/// find a split with between-class variance of at least
/// `static_variance_floor`, the whole frame is declared motionless.
fn mask_for_pair(
    cur: &GrayFrame,
    prev: &GrayFrame,
    labeling: &SuperpixelLabeling,
    params: &MotionParams,
    frame_index: usize,
) -> Result<MotionMask> {
    let smoothed = smoothed_difference(cur, prev, params)?;
    if smoothed.max_value() < params.static_diff_floor {
        return Ok(MotionMask::all_still(
            smoothed.width(),
            smoothed.height(),
            frame_index,
        ));
    }
    let otsu = otsu_threshold(&smoothed);
    if otsu.between_class_variance < params.static_variance_floor {
        return Ok(MotionMask::all_still(
            smoothed.width(),
            smoothed.height(),
            frame_index,
        ));
    }
    let pixel_mask = pixel_motion_mask(&smoothed, otsu.threshold, frame_index);
    superpixel_motion_mask(&pixel_mask, labeling)
}

/// Computes the motion mask for every frame of a subsequence.
///
/// Frame 0 has no predecessor and copies frame 1's mask. Grayscale frames and
/// labelings are indexed per subsequence frame.
pub fn motion_masks_for_subsequence(
    grays: &[GrayFrame],
    labelings: &[SuperpixelLabeling],
    params: &MotionParams,
) -> Result<Vec<MotionMask>> {
    params.validate()?;
    if grays.is_empty() {
        return Err(Error::EmptySequence);
    }
    if grays.len() != labelings.len() {
        return Err(Error::InvalidParam(format!(
            "{} gray frames but {} labelings",
            grays.len(),
            labelings.len()
        )));
    }
    if grays.len() == 1 {
        return Err(Error::InvalidParam(
            "motion masks need at least 2 frames".into(),
        ));
    }

    let mut masks: Vec<MotionMask> = (1..grays.len())
        .into_par_iter()
        .map(|n| mask_for_pair(&grays[n], &grays[n - 1], &labelings[n], params, n))
        .collect::<Result<_>>()?;

    let mut first = masks[0].clone();
    first.frame_index = 0;
    masks.insert(0, first);
    Ok(masks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::ColorFrame;
    use crate::imaging::to_gray;
    use crate::slic::{segment, SlicParams};

    fn gray(w: usize, h: usize, px: Vec<u8>) -> GrayFrame {
        GrayFrame::new(w, h, px).unwrap()
    }

    /// Exhaustive intra-class variance minimization over all 256 thresholds,
    /// computed naively in f64. Class 0 is {v < g}, class 1 is {v >= g}.
    fn otsu_oracle(values: &[u8]) -> u8 {
        let mut best_g = 0u8;
        let mut best = f64::INFINITY;
        for g in 0..=255u16 {
            let class0: Vec<f64> = values
                .iter()
                .filter(|&&v| (v as u16) < g)
                .map(|&v| v as f64)
                .collect();
            let class1: Vec<f64> = values
                .iter()
                .filter(|&&v| (v as u16) >= g)
                .map(|&v| v as f64)
                .collect();
            let var = |c: &[f64]| {
                if c.is_empty() {
                    return 0.0;
                }
                let mean = c.iter().sum::<f64>() / c.len() as f64;
                c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c.len() as f64
            };
            let w0 = class0.len() as f64 / values.len() as f64;
            let w1 = class1.len() as f64 / values.len() as f64;
            let intra = w0 * var(&class0) + w1 * var(&class1);
            if intra < best - 1e-9 {
                best = intra;
                best_g = g as u8;
            }
        }
        best_g
    }

    #[test]
    fn difference_examples() {
        let a = gray(1, 1, vec![10]);
        let b = gray(1, 1, vec![250]);
        assert_eq!(frame_difference(&b, &a).unwrap().pixel(0, 0), 240);

        let f = gray(3, 2, vec![5, 9, 200, 0, 13, 90]);
        assert!(frame_difference(&f, &f).unwrap().pixels().iter().all(|&v| v == 0));

        let g = gray(3, 2, vec![9, 9, 100, 255, 13, 80]);
        let d = frame_difference(&f, &g).unwrap();
        for i in 0..6 {
            assert_eq!(d.pixels()[i], f.pixels()[i].abs_diff(g.pixels()[i]));
        }
    }

    #[test]
    fn difference_rejects_mismatched_dims() {
        let a = gray(2, 2, vec![0; 4]);
        let b = gray(2, 3, vec![0; 6]);
        assert!(frame_difference(&a, &b).is_err());
    }

    #[test]
    fn otsu_bimodal() {
        let px: Vec<u8> = (0..100).map(|i| if i < 50 { 40 } else { 200 }).collect();
        let r = otsu_threshold(&gray(10, 10, px.clone()));
        assert!(r.threshold > 40 && r.threshold <= 200);
        assert_eq!(r.threshold, otsu_oracle(&px));
        assert!(r.between_class_variance > 0.0);
    }

    #[test]
    fn otsu_constant_frame_is_degenerate() {
        let r = otsu_threshold(&GrayFrame::filled(4, 4, 99));
        assert_eq!(r.between_class_variance, 0.0);
        assert_eq!(r.threshold, 0);
    }

    #[test]
    fn otsu_three_level_matches_oracle() {
        let px: Vec<u8> = (0..120)
            .map(|i| match i % 3 {
                0 => 10,
                1 => 90,
                _ => 220,
            })
            .collect();
        let r = otsu_threshold(&gray(12, 10, px.clone()));
        assert_eq!(r.threshold, otsu_oracle(&px));
    }

    #[test]
    fn otsu_random_frames_match_oracle() {
        // Deterministic pseudo-random values, bimodal-ish with outliers.
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..50 {
            let n = 16 + (next() % 200) as usize;
            let px: Vec<u8> = (0..n)
                .map(|_| match next() % 4 {
                    0 => (next() % 40) as u8,
                    1 => (140 + next() % 60) as u8,
                    _ => (next() % 256) as u8,
                })
                .collect();
            let f = GrayFrame::new(n, 1, px.clone()).unwrap();
            assert_eq!(otsu_threshold(&f).threshold, otsu_oracle(&px));
        }
    }

    #[test]
    fn pixel_mask_boundary_cases() {
        let zeros = GrayFrame::filled(4, 3, 0);
        assert_eq!(pixel_motion_mask(&zeros, 0, 1).moving_count(), 12);
        assert_eq!(pixel_motion_mask(&zeros, 1, 1).moving_count(), 0);

        let f = gray(4, 1, vec![3, 7, 10, 200]);
        let m = pixel_motion_mask(&f, 8, 2);
        assert_eq!(m.moving(), &[false, false, true, true]);
    }

    fn labeling_for(frame: &ColorFrame) -> SuperpixelLabeling {
        segment(
            frame,
            &SlicParams {
                sigma_n: 8.0,
                compactness: 10.0,
                max_iterations: 5,
            },
        )
        .unwrap()
    }

    #[test]
    fn superpixel_mask_dilates_regions() {
        let f = ColorFrame::filled(32, 32, [120, 120, 120]);
        let labeling = labeling_for(&f);
        let mut moving = vec![false; 32 * 32];
        moving[5 * 32 + 5] = true;
        let pm = MotionMask::new(32, 32, moving, 3).unwrap();
        let sm = superpixel_motion_mask(&pm, &labeling).unwrap();

        let hit_label = labeling.label(5, 5);
        for (idx, &l) in labeling.labels().iter().enumerate() {
            assert_eq!(sm.moving()[idx], l == hit_label);
        }
        // All-false stays all-false.
        let empty = MotionMask::all_still(32, 32, 3);
        assert_eq!(superpixel_motion_mask(&empty, &labeling).unwrap().moving_count(), 0);
    }

    #[test]
    fn superpixel_mask_matches_region_scan_oracle() {
        let f = ColorFrame::filled(32, 32, [80, 10, 10]);
        let labeling = labeling_for(&f);
        let moving: Vec<bool> = (0..32 * 32).map(|i| i % 37 == 0).collect();
        let pm = MotionMask::new(32, 32, moving.clone(), 0).unwrap();
        let sm = superpixel_motion_mask(&pm, &labeling).unwrap();
        for (idx, &l) in labeling.labels().iter().enumerate() {
            let any_moving = labeling
                .labels()
                .iter()
                .enumerate()
                .any(|(j, &l2)| l2 == l && moving[j]);
            assert_eq!(sm.moving()[idx], any_moving);
        }
    }

    #[test]
    fn superpixel_mask_is_superset_and_idempotent() {
        let f = ColorFrame::filled(40, 24, [9, 90, 200]);
        let labeling = labeling_for(&f);
        let moving: Vec<bool> = (0..40 * 24).map(|i| i % 53 == 1).collect();
        let pm = MotionMask::new(40, 24, moving, 0).unwrap();
        let sm = superpixel_motion_mask(&pm, &labeling).unwrap();
        for i in 0..40 * 24 {
            assert!(!pm.moving()[i] || sm.moving()[i]);
        }
        let sm2 = superpixel_motion_mask(&sm, &labeling).unwrap();
        assert_eq!(sm, sm2);
    }

    #[test]
    fn static_sequence_yields_motionless_masks() {
        let f = ColorFrame::filled(32, 32, [77, 77, 77]);
        let grays = vec![to_gray(&f); 5];
        let labelings = vec![labeling_for(&f); 5];
        let masks =
            motion_masks_for_subsequence(&grays, &labelings, &MotionParams::default()).unwrap();
        assert_eq!(masks.len(), 5);
        assert!(masks.iter().all(|m| m.moving_count() == 0));
    }

    #[test]
    fn moving_box_is_fully_masked() {
        // The box teleports farther than its own side so consecutive
        // footprints do not overlap; every box pixel then differs.
        let w = 64;
        let h = 64;
        let mut frames = Vec::new();
        for t in 0..3usize {
            let mut f = ColorFrame::filled(w, h, [40, 40, 40]);
            let x0 = 2 + t * 21;
            for y in 10..30 {
                for x in x0..x0 + 20 {
                    *f.pixel_mut(x, y) = [230, 230, 230];
                }
            }
            frames.push(f);
        }
        let grays: Vec<GrayFrame> = frames.iter().map(to_gray).collect();
        let labelings: Vec<SuperpixelLabeling> = frames.iter().map(labeling_for).collect();
        let masks =
            motion_masks_for_subsequence(&grays, &labelings, &MotionParams::default()).unwrap();
        for (t, mask) in masks.iter().enumerate() {
            let x0 = 2 + t * 21;
            for y in 10..30 {
                for x in x0..x0 + 20 {
                    assert!(mask.is_moving(x, y), "frame {t} hole at ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn two_frame_sequence_copies_mask() {
        let a = ColorFrame::filled(32, 32, [10, 10, 10]);
        let mut b = a.clone();
        for y in 8..20 {
            for x in 8..26 {
                *b.pixel_mut(x, y) = [240, 240, 240];
            }
        }
        let grays = vec![to_gray(&a), to_gray(&b)];
        let labelings = vec![labeling_for(&a), labeling_for(&b)];
        let masks =
            motion_masks_for_subsequence(&grays, &labelings, &MotionParams::default()).unwrap();
        assert_eq!(masks[0].moving(), masks[1].moving());
        assert_eq!(masks[0].frame_index, 0);
        assert_eq!(masks[1].frame_index, 1);
        assert!(masks[1].moving_count() > 0);
    }

    #[test]
    fn empty_and_single_frame_are_rejected() {
        assert!(motion_masks_for_subsequence(&[], &[], &MotionParams::default()).is_err());
        let f = GrayFrame::filled(8, 8, 1);
        let l = labeling_for(&ColorFrame::filled(32, 32, [0, 0, 0]));
        assert!(motion_masks_for_subsequence(&[f], &[l], &MotionParams::default()).is_err());
    }
}
