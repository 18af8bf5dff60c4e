//! End-to-end orchestration of the four pipeline stages.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::cluster::cluster_all_pixels;
use crate::config::PipelineConfig;
use crate::decide::{estimate_background, BackgroundEstimate, Provenance};
use crate::error::{Error, Result};
use crate::frame::{FrameSequence, GrayFrame};
use crate::illumination::select_stable_subsequence;
use crate::imaging::to_gray;
use crate::motion::{motion_masks_for_subsequence, MotionMask};
use crate::slic::{segment, SuperpixelLabeling};

/// Wall time spent in each stage.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimes {
    pub illumination: Duration,
    pub segmentation: Duration,
    pub motion: Duration,
    pub clustering: Duration,
    pub decision: Duration,
}

impl StageTimes {
    pub fn sum(&self) -> Duration {
        self.illumination + self.segmentation + self.motion + self.clustering + self.decision
    }
}

/// Statistics of one pipeline run.
#[derive(Debug, Clone)]
pub struct RunStats {
    /// Frames in the input sequence.
    pub frames_in: usize,
    /// Frames in the selected stable subsequence.
    pub frames_used: usize,
    /// Selected subsequence bounds (inclusive).
    pub subsequence: (usize, usize),
    /// Frames at which illumination changes were detected.
    pub boundaries: Vec<usize>,
    pub stages: StageTimes,
    pub total: Duration,
    /// Positions decided by the fallback ladder.
    pub fallback_pixels: usize,
}

impl RunStats {
    /// End-to-end throughput over the input sequence.
    pub fn fps(&self) -> f64 {
        self.frames_in as f64 / self.total.as_secs_f64().max(1e-9)
    }
}

/// Intermediates kept when `debug_dumps` is enabled.
#[derive(Debug, Clone)]
pub struct DebugArtifacts {
    /// Per-subsequence-frame superpixel labelings.
    pub labelings: Vec<SuperpixelLabeling>,
    /// Per-subsequence-frame motion masks.
    pub masks: Vec<MotionMask>,
}

/// Result of a pipeline run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub background: BackgroundEstimate,
    pub stats: RunStats,
    pub debug: Option<DebugArtifacts>,
}

/// Runs the full pipeline: stable-subsequence selection, superpixel
/// segmentation, motion masking, per-pixel clustering and the final decision.
///
/// The run is deterministic for a fixed input and config, whatever the worker
/// count: parallel stages partition disjoint work and merge by index.
pub fn run_spmd(frames: &FrameSequence, config: &PipelineConfig) -> Result<RunArtifacts> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidParam(format!("worker pool: {e}")))?;
    pool.install(|| run_inner(frames, config))
}

fn run_inner(frames: &FrameSequence, config: &PipelineConfig) -> Result<RunArtifacts> {
    let total_start = Instant::now();
    let mut stages = StageTimes::default();

    let stage = Instant::now();
    let selection = select_stable_subsequence(frames, &config.illumination())?;
    let sub = frames.slice(selection.start_index, selection.end_index);
    stages.illumination = stage.elapsed();

    // A single stable frame has no motion information; it is the background.
    if sub.len() == 1 {
        let frame = sub[0].clone();
        let gray = to_gray(&frame);
        let px = frame.width() * frame.height();
        let background = BackgroundEstimate {
            color: frame,
            gray,
            provenance: vec![Provenance::Fallback; px],
        };
        let fallback_pixels = px;
        return Ok(RunArtifacts {
            background,
            stats: RunStats {
                frames_in: frames.len(),
                frames_used: 1,
                subsequence: (selection.start_index, selection.end_index),
                boundaries: selection.boundaries,
                stages,
                total: total_start.elapsed(),
                fallback_pixels,
            },
            debug: None,
        });
    }

    let stage = Instant::now();
    let labelings: Vec<SuperpixelLabeling> = sub
        .frames()
        .par_iter()
        .map(|f| segment(f, &config.slic()))
        .collect::<Result<_>>()?;
    stages.segmentation = stage.elapsed();

    let stage = Instant::now();
    let grays: Vec<GrayFrame> = sub.frames().par_iter().map(to_gray).collect();
    let masks = motion_masks_for_subsequence(&grays, &labelings, &config.motion())?;
    stages.motion = stage.elapsed();

    let stage = Instant::now();
    let grid = cluster_all_pixels(
        &sub,
        &grays,
        &masks,
        config.cluster_epsilon,
        &config.min_pts_policy(),
    )?;
    stages.clustering = stage.elapsed();

    let stage = Instant::now();
    let background = estimate_background(
        &sub,
        &grays,
        &grid,
        config.cluster_epsilon,
        &config.min_pts_policy(),
    )?;
    stages.decision = stage.elapsed();

    let fallback_pixels = background.fallback_count();
    let debug = config.debug_dumps.then_some(DebugArtifacts { labelings, masks });
    Ok(RunArtifacts {
        background,
        stats: RunStats {
            frames_in: frames.len(),
            frames_used: sub.len(),
            subsequence: (selection.start_index, selection.end_index),
            boundaries: selection.boundaries,
            stages,
            total: total_start.elapsed(),
            fallback_pixels,
        },
        debug,
    })
}
