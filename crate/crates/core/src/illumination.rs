//! Illumination change detection and stable-subsequence selection.
//!
//! A global illumination change shifts the value-channel histogram while
//! leaving its shape intact, so equalizing both histograms makes them nearly
//! identical again. Object motion changes the histogram shape, which survives
//! equalization. Comparing both distances separates the two cases.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{ColorFrame, FrameSequence};
use crate::imaging::{equalize, histogram, to_hsv_value_channel, Histogram256};

/// Thresholds for the two-distance illumination test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlluminationParams {
    /// Minimum Hellinger distance between raw value histograms.
    pub tau_h: f64,
    /// Maximum Hellinger distance between equalized histograms.
    pub tau_eh: f64,
}

impl Default for IlluminationParams {
    fn default() -> Self {
        Self {
            tau_h: 0.20,
            tau_eh: 0.10,
        }
    }
}

impl IlluminationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau_h", self.tau_h), ("tau_eh", self.tau_eh)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParam(format!(
                    "{name} must be in (0, 1), got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// The illumination-stable span chosen from a sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsequenceSelection {
    /// First frame of the selected span (0-based, inclusive).
    pub start_index: usize,
    /// Last frame of the selected span (inclusive).
    pub end_index: usize,
    /// Frames at which an illumination change was detected.
    pub boundaries: Vec<usize>,
}

impl SubsequenceSelection {
    pub fn len(&self) -> usize {
        self.end_index - self.start_index + 1
    }

    pub fn is_empty(&self) -> bool {
        false // a selection always spans at least one frame
    }
}

/// Hellinger distance between two histograms: sqrt(1 - bc), where bc is the
/// Bhattacharyya coefficient. Normalization is built in, so the distance is
/// invariant to uniform scaling of either histogram.
pub fn hellinger_distance(h1: &Histogram256, h2: &Histogram256) -> Result<f64> {
    let t1 = h1.total();
    let t2 = h2.total();
    if t1 == 0 || t2 == 0 {
        return Err(Error::EmptyHistogram);
    }
    let mut overlap = 0.0;
    for i in 0..256 {
        let a = h1.bins()[i];
        let b = h2.bins()[i];
        if a != 0 && b != 0 {
            overlap += (a as f64 * b as f64).sqrt();
        }
    }
    let bc = overlap / (t1 as f64 * t2 as f64).sqrt();
    // bc can exceed 1 by a few ulps for identical histograms.
    Ok((1.0 - bc).max(0.0).sqrt())
}

/// Per-frame histogram pair used by the detector.
#[derive(Debug, Clone)]
struct ValueHistograms {
    raw: Histogram256,
    equalized: Histogram256,
}

fn value_histograms(frame: &ColorFrame) -> ValueHistograms {
    let v = to_hsv_value_channel(frame);
    let raw = histogram(&v);
    let equalized = histogram(&equalize(&v));
    ValueHistograms { raw, equalized }
}

fn change_between(reference: &ValueHistograms, current: &ValueHistograms, params: &IlluminationParams) -> Result<bool> {
    let d_raw = hellinger_distance(&reference.raw, &current.raw)?;
    let d_eq = hellinger_distance(&reference.equalized, &current.equalized)?;
    Ok(d_raw > params.tau_h && d_eq < params.tau_eh)
}

/// Tests whether the difference between two frames is a global illumination
/// change: the raw value histograms differ strongly while the equalized
/// histograms stay close.
pub fn is_illumination_change(
    ref_frame: &ColorFrame,
    cur_frame: &ColorFrame,
    params: &IlluminationParams,
) -> Result<bool> {
    if ref_frame.dims() != cur_frame.dims() {
        return Err(Error::dims(ref_frame.dims(), cur_frame.dims()));
    }
    params.validate()?;
    change_between(
        &value_histograms(ref_frame),
        &value_histograms(cur_frame),
        params,
    )
}

/// Scans the sequence against a running reference frame and returns the
/// longest illumination-stable span (ties broken toward the later span).
///
/// The reference starts at frame 0; whenever a change is detected at frame t,
/// t becomes a boundary, a new span starts there, and frame t becomes the new
/// reference.
pub fn select_stable_subsequence(
    frames: &FrameSequence,
    params: &IlluminationParams,
) -> Result<SubsequenceSelection> {
    params.validate()?;
    let hists: Vec<ValueHistograms> = frames
        .frames()
        .par_iter()
        .map(value_histograms)
        .collect();

    let mut boundaries = Vec::new();
    let mut spans = Vec::new();
    let mut span_start = 0usize;
    let mut reference = 0usize;
    for t in 1..frames.len() {
        if change_between(&hists[reference], &hists[t], params)? {
            boundaries.push(t);
            spans.push((span_start, t - 1));
            span_start = t;
            reference = t;
        }
    }
    spans.push((span_start, frames.len() - 1));

    // Longest span, later one on ties.
    let (start_index, end_index) = spans
        .into_iter()
        .max_by(|a, b| {
            let la = a.1 - a.0;
            let lb = b.1 - b.0;
            la.cmp(&lb).then(a.0.cmp(&b.0))
        })
        .expect("at least one span");

    Ok(SubsequenceSelection {
        start_index,
        end_index,
        boundaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::GrayFrame;

    fn hist_from_pairs(pairs: &[(u8, u64)]) -> Histogram256 {
        let mut bins = [0u64; 256];
        for &(v, c) in pairs {
            bins[v as usize] = c;
        }
        Histogram256::from_bins(bins)
    }

    /// A deterministic textured frame with channel values in [lo, hi].
    fn textured_frame(w: usize, h: usize, lo: u8, hi: u8) -> ColorFrame {
        let span = (hi - lo) as u32;
        let px = (0..w * h)
            .map(|i| {
                let r = lo as u32 + (i as u32 * 7919 % (span + 1));
                let g = lo as u32 + (i as u32 * 104729 % (span + 1));
                let b = lo as u32 + (i as u32 * 1299709 % (span + 1));
                [r as u8, g as u8, b as u8]
            })
            .collect();
        ColorFrame::new(w, h, px).unwrap()
    }

    fn brightened(frame: &ColorFrame, offset: u8) -> ColorFrame {
        let px = frame
            .pixels()
            .iter()
            .map(|p| p.map(|c| c.saturating_add(offset)))
            .collect();
        ColorFrame::new(frame.width(), frame.height(), px).unwrap()
    }

    #[test]
    fn hellinger_identical_is_zero() {
        let h = hist_from_pairs(&[(3, 10), (200, 5)]);
        assert_eq!(hellinger_distance(&h, &h).unwrap(), 0.0);
    }

    #[test]
    fn hellinger_disjoint_is_one() {
        let h1 = hist_from_pairs(&[(0, 4), (1, 4)]);
        let h2 = hist_from_pairs(&[(200, 9)]);
        assert!((hellinger_distance(&h1, &h2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hellinger_hand_computed_case() {
        // bc = 1/sqrt(2), d = sqrt(1 - 0.70711) = 0.54120
        let h1 = hist_from_pairs(&[(0, 1), (1, 1)]);
        let h2 = hist_from_pairs(&[(0, 1)]);
        let d = hellinger_distance(&h1, &h2).unwrap();
        assert!((d - 0.54120).abs() < 1e-4, "d = {d}");
    }

    #[test]
    fn hellinger_rejects_empty_histogram() {
        let h1 = hist_from_pairs(&[(0, 1)]);
        let empty = hist_from_pairs(&[]);
        assert!(matches!(
            hellinger_distance(&h1, &empty),
            Err(Error::EmptyHistogram)
        ));
    }

    #[test]
    fn hellinger_symmetric_bounded_scale_invariant() {
        let cases = [
            (hist_from_pairs(&[(1, 3), (9, 7), (100, 1)]), hist_from_pairs(&[(1, 5), (8, 2)])),
            (hist_from_pairs(&[(0, 1)]), hist_from_pairs(&[(255, 1)])),
            (hist_from_pairs(&[(7, 70), (8, 30)]), hist_from_pairs(&[(7, 7), (8, 3)])),
        ];
        for (a, b) in &cases {
            let d_ab = hellinger_distance(a, b).unwrap();
            let d_ba = hellinger_distance(b, a).unwrap();
            assert!((d_ab - d_ba).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&d_ab));
            let d_scaled = hellinger_distance(&a.scaled(13), b).unwrap();
            assert!((d_ab - d_scaled).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_frames_are_not_a_change() {
        let f = textured_frame(40, 30, 0, 180);
        assert!(!is_illumination_change(&f, &f, &IlluminationParams::default()).unwrap());
    }

    #[test]
    fn global_brightening_is_a_change() {
        // Channel values stay under 195 so +60 shifts the V histogram exactly,
        // which makes the equalized images identical.
        let f = textured_frame(40, 30, 0, 180);
        let bright = brightened(&f, 60);
        assert!(is_illumination_change(&f, &bright, &IlluminationParams::default()).unwrap());
    }

    #[test]
    fn moving_object_is_not_a_change() {
        let f = textured_frame(40, 30, 0, 180);
        let mut with_object = f.clone();
        for y in 5..25 {
            for x in 5..25 {
                *with_object.pixel_mut(x, y) = [230, 230, 230];
            }
        }
        assert!(!is_illumination_change(&f, &with_object, &IlluminationParams::default()).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = textured_frame(10, 10, 0, 100);
        let b = textured_frame(11, 10, 0, 100);
        assert!(is_illumination_change(&a, &b, &IlluminationParams::default()).is_err());
    }

    #[test]
    fn stable_sequence_selects_full_range() {
        let f = textured_frame(20, 20, 0, 180);
        let frames = FrameSequence::new(vec![f; 8]).unwrap();
        let sel = select_stable_subsequence(&frames, &IlluminationParams::default()).unwrap();
        assert_eq!((sel.start_index, sel.end_index), (0, 7));
        assert!(sel.boundaries.is_empty());
    }

    #[test]
    fn light_switch_selects_longer_later_span() {
        let base = textured_frame(24, 18, 0, 180);
        let bright = brightened(&base, 60);
        let mut frames = vec![base; 30];
        frames.extend(std::iter::repeat(bright).take(70));
        let seq = FrameSequence::new(frames).unwrap();
        let sel = select_stable_subsequence(&seq, &IlluminationParams::default()).unwrap();
        assert_eq!(sel.boundaries, vec![30]);
        assert_eq!((sel.start_index, sel.end_index), (30, 99));
    }

    #[test]
    fn equal_spans_tie_break_to_later() {
        let base = textured_frame(24, 18, 0, 180);
        let bright = brightened(&base, 60);
        let mut frames = vec![base; 50];
        frames.extend(std::iter::repeat(bright).take(50));
        let seq = FrameSequence::new(frames).unwrap();
        let sel = select_stable_subsequence(&seq, &IlluminationParams::default()).unwrap();
        assert_eq!((sel.start_index, sel.end_index), (50, 99));
    }

    #[test]
    fn single_frame_selects_itself() {
        let f = textured_frame(8, 8, 0, 100);
        let seq = FrameSequence::new(vec![f]).unwrap();
        let sel = select_stable_subsequence(&seq, &IlluminationParams::default()).unwrap();
        assert_eq!((sel.start_index, sel.end_index), (0, 0));
    }

    #[test]
    fn selected_span_has_no_internal_change_against_reference() {
        let base = textured_frame(24, 18, 0, 150);
        let bright = brightened(&base, 70);
        let mut frames = vec![base; 20];
        frames.extend(std::iter::repeat(bright).take(40));
        let seq = FrameSequence::new(frames).unwrap();
        let params = IlluminationParams::default();
        let sel = select_stable_subsequence(&seq, &params).unwrap();
        let reference = &seq[sel.start_index];
        for t in sel.start_index + 1..=sel.end_index {
            assert!(!is_illumination_change(reference, &seq[t], &params).unwrap());
        }
    }

    #[test]
    fn value_histogram_feeds_detector() {
        // Sanity: the detector really looks at V, not raw luma. A pure-blue to
        // pure-red swap keeps V identical, so no change can be detected.
        let blue = ColorFrame::filled(10, 10, [0, 0, 200]);
        let red = ColorFrame::filled(10, 10, [200, 0, 0]);
        let v_blue = to_hsv_value_channel(&blue);
        let v_red = to_hsv_value_channel(&red);
        assert_eq!(GrayFrame::filled(10, 10, 200), v_blue);
        assert_eq!(v_blue, v_red);
        assert!(!is_illumination_change(&blue, &red, &IlluminationParams::default()).unwrap());
    }
}
