//! Pipeline configuration: every tunable of the four stages, with defaults
//! matching the library's reference behavior and a flat key-value file format
//! (TOML syntax, one scalar per key).

use serde::{Deserialize, Serialize};

use crate::cluster::MinPtsPolicy;
use crate::error::{Error, Result};
use crate::illumination::IlluminationParams;
use crate::motion::MotionParams;
use crate::slic::SlicParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Illumination change: minimum distance between raw value histograms.
    pub tau_h: f64,
    /// Illumination change: maximum distance between equalized histograms.
    pub tau_eh: f64,
    /// Superpixel count control; L = floor(min(W, H) / sigma_n).
    pub sigma_n: f64,
    /// Superpixel compactness weight.
    pub slic_compactness: f64,
    /// Maximum superpixel k-means iterations.
    pub slic_iterations: u32,
    /// Gaussian smoothing of difference images.
    pub blur_sigma: f64,
    pub blur_radius: usize,
    /// Static-scene guard: minimum Otsu between-class variance.
    pub static_variance_floor: f64,
    /// Static-scene guard: minimum peak of the smoothed difference.
    pub static_diff_floor: u8,
    /// Clustering neighborhood radius in gray levels.
    pub cluster_epsilon: u8,
    /// Minimum core-sample population: max(floor, ceil(fraction * samples)).
    pub min_pts_floor: usize,
    pub min_pts_fraction: f64,
    /// Worker threads; 1 runs fully sequentially. The output is identical for
    /// any worker count.
    pub workers: usize,
    /// Keep per-frame masks and labelings in the run artifacts.
    pub debug_dumps: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau_h: 0.20,
            tau_eh: 0.10,
            sigma_n: 20.0,
            slic_compactness: 10.0,
            slic_iterations: 10,
            blur_sigma: 1.0,
            blur_radius: 2,
            static_variance_floor: 1.0,
            static_diff_floor: 4,
            cluster_epsilon: 10,
            min_pts_floor: 3,
            min_pts_fraction: 0.02,
            workers: 1,
            debug_dumps: false,
        }
    }
}

impl PipelineConfig {
    pub fn illumination(&self) -> IlluminationParams {
        IlluminationParams {
            tau_h: self.tau_h,
            tau_eh: self.tau_eh,
        }
    }

    pub fn slic(&self) -> SlicParams {
        SlicParams {
            sigma_n: self.sigma_n,
            compactness: self.slic_compactness,
            max_iterations: self.slic_iterations,
        }
    }

    pub fn motion(&self) -> MotionParams {
        MotionParams {
            blur_sigma: self.blur_sigma,
            blur_radius: self.blur_radius,
            static_variance_floor: self.static_variance_floor,
            static_diff_floor: self.static_diff_floor,
        }
    }

    pub fn min_pts_policy(&self) -> MinPtsPolicy {
        MinPtsPolicy {
            floor: self.min_pts_floor,
            fraction: self.min_pts_fraction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.illumination().validate()?;
        self.slic().validate()?;
        self.motion().validate()?;
        self.min_pts_policy().validate()?;
        if self.cluster_epsilon == 0 {
            return Err(Error::InvalidParam("cluster_epsilon must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParam("workers must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}
