//! Final background determination from per-pixel cluster candidates.
//!
//! Each candidate is scored by cluster mass over distance to a reference
//! built from the first and last frame; the best-scoring candidate wins. The
//! winning cluster's member frames then vote a color by per-channel median.

use rayon::prelude::*;

use crate::cluster::{cluster_pixel, ClusterGrid, ClusterParams, MinPtsPolicy, MotionlessSeries, PixelClusterSet, Sample};
use crate::error::{Error, Result};
use crate::frame::{ColorFrame, FrameSequence, GrayFrame};

/// Gray reference: per-pixel mean of the first and last frame, round-half-up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceFrame {
    pub gray: GrayFrame,
}

/// Where a background pixel's value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Decided from the motion-filtered cluster candidates.
    ClusterDecided,
    /// The position had no usable clusters; the fallback ladder decided.
    Fallback,
}

/// The estimated background with its decision-level gray values and a
/// per-pixel provenance tag.
#[derive(Debug, Clone)]
pub struct BackgroundEstimate {
    pub color: ColorFrame,
    pub gray: GrayFrame,
    pub provenance: Vec<Provenance>,
}

impl BackgroundEstimate {
    pub fn fallback_count(&self) -> usize {
        self.provenance
            .iter()
            .filter(|p| **p == Provenance::Fallback)
            .count()
    }
}

/// Builds the decision reference from the grayscale first and last frames.
pub fn build_reference(grays: &[GrayFrame]) -> Result<ReferenceFrame> {
    let first = grays.first().ok_or(Error::EmptySequence)?;
    let last = grays.last().expect("non-empty");
    if first.dims() != last.dims() {
        return Err(Error::dims(first.dims(), last.dims()));
    }
    let pixels = first
        .pixels()
        .iter()
        .zip(last.pixels())
        .map(|(&a, &b)| ((a as u16 + b as u16 + 1) / 2) as u8)
        .collect();
    Ok(ReferenceFrame {
        gray: GrayFrame::new(first.width(), first.height(), pixels)?,
    })
}

/// Picks the candidate maximizing count / max(|candidate - reference|, 1).
///
/// Ties break by larger count, then smaller distance to the reference, then
/// lower candidate value. Returns None when the cluster set is empty, which
/// signals that the caller must fall back.
pub fn decide_pixel(clusters: &PixelClusterSet, reference: u8) -> Option<(usize, u8)> {
    let mut best: Option<(usize, u64, u64)> = None; // (index, count, distance)
    for (i, c) in clusters.clusters.iter().enumerate() {
        let count = c.count as u64;
        let distance = (c.candidate.abs_diff(reference) as u64).max(1);
        let better = match best {
            None => true,
            Some((bi, bcount, bdist)) => {
                // Exact score comparison: count/distance vs bcount/bdist.
                let lhs = count * bdist;
                let rhs = bcount * distance;
                lhs > rhs
                    || (lhs == rhs
                        && (count > bcount
                            || (count == bcount
                                && (distance < bdist
                                    || (distance == bdist
                                        && c.candidate < clusters.clusters[bi].candidate)))))
            }
        };
        if better {
            best = Some((i, count, distance));
        }
    }
    best.map(|(i, _, _)| (i, clusters.clusters[i].candidate))
}

/// Per-channel lower median of a pixel's colors across the given frames.
pub fn median_color_over_frames(
    frames: &FrameSequence,
    frame_indices: &[u32],
    x: usize,
    y: usize,
) -> [u8; 3] {
    debug_assert!(!frame_indices.is_empty());
    let mut out = [0u8; 3];
    let mut channel = Vec::with_capacity(frame_indices.len());
    for c in 0..3 {
        channel.clear();
        channel.extend(frame_indices.iter().map(|&n| frames[n as usize].pixel(x, y)[c]));
        channel.sort_unstable();
        out[c] = channel[(channel.len() - 1) / 2];
    }
    out
}

fn lower_median_u8(values: &mut [u8]) -> u8 {
    values.sort_unstable();
    values[(values.len() - 1) / 2]
}

/// Decides every pixel of the background.
///
/// Positions with an empty cluster set re-cluster their full unmasked sample
/// series; if even that yields no cluster, the temporal median of all frames
/// decides. Both fallback rungs are tagged [`Provenance::Fallback`].
pub fn estimate_background(
    frames: &FrameSequence,
    grays: &[GrayFrame],
    grid: &ClusterGrid,
    epsilon: u8,
    policy: &MinPtsPolicy,
) -> Result<BackgroundEstimate> {
    if grays.len() != frames.len() {
        return Err(Error::InvalidParam(format!(
            "{} frames but {} gray frames",
            frames.len(),
            grays.len()
        )));
    }
    let (w, h) = frames.dims();
    if (grid.width(), grid.height()) != (w, h) {
        return Err(Error::dims((w, h), (grid.width(), grid.height())));
    }
    let reference = build_reference(grays)?;

    let rows: Vec<Vec<(u8, [u8; 3], Provenance)>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut row = Vec::with_capacity(w);
            for x in 0..w {
                let r = reference.gray.pixel(x, y);
                let cell = grid.cell(x, y);
                if let Some((idx, gray)) = decide_pixel(cell, r) {
                    let color =
                        median_color_over_frames(frames, &cell.clusters[idx].member_frames, x, y);
                    row.push((gray, color, Provenance::ClusterDecided));
                    continue;
                }

                // Fallback rung 1: cluster the unmasked series.
                let mut series = MotionlessSeries {
                    position: (x, y),
                    samples: (0..frames.len())
                        .map(|n| Sample {
                            frame_index: n as u32,
                            gray: grays[n].pixel(x, y),
                            color: frames[n].pixel(x, y),
                        })
                        .collect(),
                };
                series.sort();
                let params = ClusterParams {
                    epsilon,
                    min_pts: policy.min_pts_for(series.samples.len()),
                };
                let unmasked = cluster_pixel(&series, &params).expect("validated params");
                if let Some((idx, gray)) = decide_pixel(&unmasked, r) {
                    let color = median_color_over_frames(
                        frames,
                        &unmasked.clusters[idx].member_frames,
                        x,
                        y,
                    );
                    row.push((gray, color, Provenance::Fallback));
                    continue;
                }

                // Fallback rung 2: temporal median of everything.
                let mut gray_values: Vec<u8> =
                    (0..frames.len()).map(|n| grays[n].pixel(x, y)).collect();
                let gray = lower_median_u8(&mut gray_values);
                let all: Vec<u32> = (0..frames.len() as u32).collect();
                let color = median_color_over_frames(frames, &all, x, y);
                row.push((gray, color, Provenance::Fallback));
            }
            row
        })
        .collect();

    let mut color = Vec::with_capacity(w * h);
    let mut gray = Vec::with_capacity(w * h);
    let mut provenance = Vec::with_capacity(w * h);
    for row in rows {
        for (g, c, p) in row {
            gray.push(g);
            color.push(c);
            provenance.push(p);
        }
    }
    Ok(BackgroundEstimate {
        color: ColorFrame::new(w, h, color)?,
        gray: GrayFrame::new(w, h, gray)?,
        provenance,
    })
}
