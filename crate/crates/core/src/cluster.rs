//! Per-pixel density-based clustering of motionless gray intensities.
//!
//! Samples at one pixel position are sorted by gray value and swept once:
//! starting from the smallest unconsumed core sample, the right boundary is
//! extended while another core sample lies within it, which chains
//! density-reachable cores into one cluster. Noise samples (not reachable
//! from any core) belong to no cluster.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{FrameSequence, GrayFrame};
use crate::motion::MotionMask;

/// Clustering parameters: neighborhood radius in gray levels and the minimum
/// neighborhood population (counting the sample itself) for a core sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterParams {
    pub epsilon: u8,
    pub min_pts: usize,
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon == 0 {
            return Err(Error::InvalidParam("epsilon must be >= 1".into()));
        }
        if self.min_pts < 2 {
            return Err(Error::InvalidParam("min_pts must be >= 2".into()));
        }
        Ok(())
    }
}

/// How `min_pts` scales with the number of motionless samples at a position:
/// min_pts = max(floor, ceil(fraction * sample_count)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinPtsPolicy {
    pub floor: usize,
    pub fraction: f64,
}

impl Default for MinPtsPolicy {
    fn default() -> Self {
        Self {
            floor: 3,
            fraction: 0.02,
        }
    }
}

impl MinPtsPolicy {
    pub fn min_pts_for(&self, sample_count: usize) -> usize {
        self.floor.max((self.fraction * sample_count as f64).ceil() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.floor < 2 {
            return Err(Error::InvalidParam("min_pts floor must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::InvalidParam(
                "min_pts fraction must be in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// One motionless observation of a pixel position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sample {
    pub frame_index: u32,
    pub gray: u8,
    pub color: [u8; 3],
}

/// The motionless observations of one pixel position.
#[derive(Debug, Clone, Default)]
pub struct MotionlessSeries {
    pub position: (usize, usize),
    /// Sorted by (gray, frame_index) ascending before clustering.
    pub samples: Vec<Sample>,
}

impl MotionlessSeries {
    pub fn sort(&mut self) {
        self.samples
            .sort_unstable_by_key(|s| (s.gray, s.frame_index));
    }
}

/// One cluster of gray values at a pixel position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayCluster {
    /// Inclusive gray interval covered by the cluster.
    pub interval: (u8, u8),
    /// Background candidate: the lower median of member gray values.
    pub candidate: u8,
    /// Number of member samples.
    pub count: usize,
    /// Frames contributing the members, for color reconstruction.
    pub member_frames: Vec<u32>,
}

/// All clusters found at one pixel position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PixelClusterSet {
    pub position: (usize, usize),
    /// Disjoint and ascending by interval.
    pub clusters: Vec<GrayCluster>,
}

impl PixelClusterSet {
    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

/// Clusters one sorted series. Requires `series.samples` sorted by gray value.
pub fn cluster_pixel(series: &MotionlessSeries, params: &ClusterParams) -> Result<PixelClusterSet> {
    params.validate()?;
    let samples = &series.samples;
    debug_assert!(samples.windows(2).all(|w| w[0].gray <= w[1].gray));
    let n = samples.len();
    let mut set = PixelClusterSet {
        position: series.position,
        clusters: Vec::new(),
    };
    if n == 0 {
        return Ok(set);
    }
    let eps = params.epsilon as i32;
    let values: Vec<i32> = samples.iter().map(|s| s.gray as i32).collect();

    // Neighborhoods are contiguous runs in the sorted order.
    let neighborhood = |u: usize| -> (usize, usize) {
        let lo = values.partition_point(|&v| v < values[u] - eps);
        let hi = values.partition_point(|&v| v <= values[u] + eps);
        (lo, hi) // half-open [lo, hi)
    };

    // Indices of core samples, ascending (therefore sorted by value).
    let cores: Vec<usize> = (0..n)
        .filter(|&u| {
            let (lo, hi) = neighborhood(u);
            hi - lo >= params.min_pts
        })
        .collect();

    let mut next_core = 0usize; // position in `cores`
    let mut consumed_below: i32 = i32::MIN; // values <= this belong to earlier clusters
    while next_core < cores.len() {
        let seed = cores[next_core];
        let (seed_lo, _) = neighborhood(seed);
        let left_value = values[seed_lo];

        // Chain rightward: while a core sample lies within the current right
        // boundary, jump to the largest such core.
        let mut current = seed;
        loop {
            let (_, hi) = neighborhood(current);
            let right_value = values[hi - 1];
            // Largest core with value <= right_value.
            let pos = cores.partition_point(|&c| values[c] <= right_value);
            let largest = cores[pos - 1];
            if values[largest] <= values[current] {
                break;
            }
            current = largest;
        }
        let (_, chain_hi) = neighborhood(current);
        let right_value = values[chain_hi - 1];

        // Members: samples inside the interval not consumed by the previous
        // cluster (a border sample shared with it stays there).
        let effective_left = left_value.max(consumed_below + 1);
        let member_lo = values.partition_point(|&v| v < effective_left);
        let member_hi = values.partition_point(|&v| v <= right_value);
        let members = &samples[member_lo..member_hi];
        debug_assert!(!members.is_empty());

        let candidate = members[(members.len() - 1) / 2].gray;
        set.clusters.push(GrayCluster {
            interval: (members[0].gray, members[members.len() - 1].gray),
            candidate,
            count: members.len(),
            member_frames: members.iter().map(|s| s.frame_index).collect(),
        });

        consumed_below = right_value;
        while next_core < cores.len() && values[cores[next_core]] <= right_value {
            next_core += 1;
        }
    }
    Ok(set)
}

/// Per-position cluster sets for a whole frame grid.
#[derive(Debug, Clone)]
pub struct ClusterGrid {
    width: usize,
    height: usize,
    cells: Vec<PixelClusterSet>,
}

impl ClusterGrid {
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn cell(&self, x: usize, y: usize) -> &PixelClusterSet {
        &self.cells[y * self.width + x]
    }

    #[inline]
    pub fn cells(&self) -> &[PixelClusterSet] {
        &self.cells
    }
}

/// Builds the sorted motionless series for one position.
pub fn motionless_series_at(
    frames: &FrameSequence,
    grays: &[GrayFrame],
    masks: &[MotionMask],
    x: usize,
    y: usize,
) -> MotionlessSeries {
    let mut series = MotionlessSeries {
        position: (x, y),
        samples: Vec::new(),
    };
    for (n, mask) in masks.iter().enumerate() {
        if !mask.is_moving(x, y) {
            series.samples.push(Sample {
                frame_index: n as u32,
                gray: grays[n].pixel(x, y),
                color: frames[n].pixel(x, y),
            });
        }
    }
    series.sort();
    series
}

/// Clusters every pixel position of the subsequence. Positions that are
/// moving in every frame get an empty cluster set and are resolved later by
/// the background decision fallback.
pub fn cluster_all_pixels(
    frames: &FrameSequence,
    grays: &[GrayFrame],
    masks: &[MotionMask],
    epsilon: u8,
    policy: &MinPtsPolicy,
) -> Result<ClusterGrid> {
    policy.validate()?;
    if grays.len() != frames.len() || masks.len() != frames.len() {
        return Err(Error::InvalidParam(format!(
            "stage lengths disagree: {} frames, {} grays, {} masks",
            frames.len(),
            grays.len(),
            masks.len()
        )));
    }
    let (w, h) = frames.dims();
    let cells: Vec<PixelClusterSet> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..w).map(move |x| (x, y))
        })
        .map(|(x, y)| {
            let series = motionless_series_at(frames, grays, masks, x, y);
            let params = ClusterParams {
                epsilon,
                min_pts: policy.min_pts_for(series.samples.len()),
            };
            cluster_pixel(&series, &params)
        })
        .collect::<Result<_>>()?;
    Ok(ClusterGrid {
        width: w,
        height: h,
        cells,
    })
}
