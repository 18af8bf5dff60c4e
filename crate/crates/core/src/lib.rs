//! Background initialization from video frame sequences.
//!
//! Given an ordered set of frames, the pipeline recovers a single clean
//! background image in four steps: it selects the longest illumination-stable
//! subsequence, detects motion per frame at superpixel granularity, clusters
//! the motionless intensities seen at each pixel position, and picks the final
//! background value per pixel from the cluster candidates. A temporal-median
//! baseline and the six standard background-quality metrics are included for
//! evaluation.

pub mod baseline;
pub mod cluster;
pub mod config;
pub mod decide;
pub mod error;
pub mod frame;
pub mod illumination;
pub mod imaging;
pub mod io;
pub mod metrics;
pub mod motion;
pub mod pipeline;
pub mod slic;
pub mod synth;

pub use cluster::{ClusterGrid, ClusterParams, MotionlessSeries, PixelClusterSet};
pub use config::PipelineConfig;
pub use decide::{BackgroundEstimate, Provenance, ReferenceFrame};
pub use error::{Error, Result};
pub use frame::{ColorFrame, FrameSequence, GrayFrame, GrayFrameF32};
pub use illumination::{IlluminationParams, SubsequenceSelection};
pub use imaging::Histogram256;
pub use metrics::MetricReport;
pub use motion::{MotionMask, OtsuResult};
pub use pipeline::{DebugArtifacts, RunArtifacts, RunStats, StageTimes};
pub use slic::{SlicParams, SuperpixelLabeling};
pub use synth::SyntheticScene;
