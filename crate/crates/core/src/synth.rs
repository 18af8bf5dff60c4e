//! Synthetic frame-sequence generation with exact ground truth, used by the
//! test suites and the `synth` CLI subcommand.
//!
//! A scene is a declarative script: a procedural background, moving objects
//! with visibility intervals and linear trajectories, an optional global
//! illumination step or ramp, and additive Gaussian noise. Rendering is
//! deterministic for a fixed seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{ColorFrame, FrameSequence};

/// Procedural background fill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Background {
    /// One flat color.
    Solid { color: [u8; 3] },
    /// Two-color checkerboard with square cells.
    Checker {
        colors: [[u8; 3]; 2],
        cell: usize,
    },
    /// Horizontal gradient between two colors.
    Gradient { from: [u8; 3], to: [u8; 3] },
    /// Smoothed random texture built from the scene seed.
    Texture {
        low: [u8; 3],
        high: [u8; 3],
        /// Feature size in pixels.
        scale: usize,
    },
}

/// A moving (or parked) object drawn over the background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectScript {
    #[serde(default = "default_shape")]
    pub shape: Shape,
    pub color: [u8; 3],
    /// Width and height in pixels.
    pub size: (usize, usize),
    /// Top-left position at the start of the visibility interval.
    pub start: (i64, i64),
    /// Top-left position at the end of the visibility interval.
    pub end: (i64, i64),
    /// Half-open frame interval [from, to) during which the object is drawn.
    pub visible: (usize, usize),
    /// Amplitude of a rigid speckle texture riding on the base color
    /// (0 renders a flat object).
    #[serde(default)]
    pub texture_amplitude: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Rect,
    Ellipse,
}

fn default_shape() -> Shape {
    Shape::Rect
}

/// Global illumination script applied to whole frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Illumination {
    None,
    /// Offset jumps from 0 to `offset` at frame `at`.
    Step { at: usize, offset: i16 },
    /// Offset ramps linearly from 0 to `offset` across the sequence.
    Ramp { offset: i16 },
}

impl Default for Illumination {
    fn default() -> Self {
        Illumination::None
    }
}

/// A complete scene script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub width: usize,
    pub height: usize,
    /// Default frame count for CLI rendering; tests may override.
    pub frame_count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_sigma: f64,
    pub background: Background,
    #[serde(default)]
    pub objects: Vec<ObjectScript>,
    #[serde(default)]
    pub illumination: Illumination,
}

impl SyntheticScene {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scene: SyntheticScene =
            toml::from_str(text).map_err(|e| Error::InvalidScript(e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scene serializes")
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidScript("frame dimensions must be positive".into()));
        }
        if self.frame_count == 0 {
            return Err(Error::InvalidScript("frame_count must be >= 1".into()));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::InvalidScript("noise_sigma must be >= 0".into()));
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.size.0 == 0 || o.size.1 == 0 {
                return Err(Error::InvalidScript(format!("object {i} has empty size")));
            }
            if o.visible.0 >= o.visible.1 {
                return Err(Error::InvalidScript(format!(
                    "object {i} has empty visibility interval"
                )));
            }
            // The trajectory is linear, so checking both endpoints bounds it.
            for (px, py) in [o.start, o.end] {
                let in_x = px >= 0 && px + o.size.0 as i64 <= self.width as i64;
                let in_y = py >= 0 && py + o.size.1 as i64 <= self.height as i64;
                if !in_x || !in_y {
                    return Err(Error::InvalidScript(format!(
                        "object {i} leaves the {}x{} frame at ({px}, {py})",
                        self.width, self.height
                    )));
                }
            }
        }
        Ok(())
    }
}

fn render_background(scene: &SyntheticScene) -> ColorFrame {
    let (w, h) = (scene.width, scene.height);
    match &scene.background {
        Background::Solid { color } => ColorFrame::filled(w, h, *color),
        Background::Checker { colors, cell } => {
            let cell = (*cell).max(1);
            let px = (0..w * h)
                .map(|i| {
                    let (x, y) = (i % w, i / w);
                    colors[(x / cell + y / cell) % 2]
                })
                .collect();
            ColorFrame::new(w, h, px).expect("valid dims")
        }
        Background::Gradient { from, to } => {
            let px = (0..w * h)
                .map(|i| {
                    let x = i % w;
                    let t = if w > 1 { x as f64 / (w - 1) as f64 } else { 0.0 };
                    let mut c = [0u8; 3];
                    for k in 0..3 {
                        c[k] = (from[k] as f64 + (to[k] as f64 - from[k] as f64) * t)
                            .round() as u8;
                    }
                    c
                })
                .collect();
            ColorFrame::new(w, h, px).expect("valid dims")
        }
        Background::Texture { low, high, scale } => {
            // Value noise: random lattice values blended bilinearly.
            let scale = (*scale).max(1);
            let gw = w / scale + 2;
            let gh = h / scale + 2;
            let mut rng = ChaCha8Rng::seed_from_u64(scene.seed ^ 0xB16B00B5);
            let lattice: Vec<f64> = (0..gw * gh)
                .map(|_| rand::Rng::gen::<f64>(&mut rng))
                .collect();
            let px = (0..w * h)
                .map(|i| {
                    let (x, y) = (i % w, i / w);
                    let fx = x as f64 / scale as f64;
                    let fy = y as f64 / scale as f64;
                    let (x0, y0) = (fx as usize, fy as usize);
                    let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
                    let v00 = lattice[y0 * gw + x0];
                    let v10 = lattice[y0 * gw + x0 + 1];
                    let v01 = lattice[(y0 + 1) * gw + x0];
                    let v11 = lattice[(y0 + 1) * gw + x0 + 1];
                    let v = v00 * (1.0 - tx) * (1.0 - ty)
                        + v10 * tx * (1.0 - ty)
                        + v01 * (1.0 - tx) * ty
                        + v11 * tx * ty;
                    let mut c = [0u8; 3];
                    for k in 0..3 {
                        c[k] = (low[k] as f64 + (high[k] as f64 - low[k] as f64) * v)
                            .round() as u8;
                    }
                    c
                })
                .collect();
            ColorFrame::new(w, h, px).expect("valid dims")
        }
    }
}

fn object_position(o: &ObjectScript, t: usize) -> (i64, i64) {
    let span = (o.visible.1 - 1).saturating_sub(o.visible.0).max(1) as f64;
    let progress = (t - o.visible.0) as f64 / span;
    let x = o.start.0 as f64 + (o.end.0 - o.start.0) as f64 * progress;
    let y = o.start.1 as f64 + (o.end.1 - o.start.1) as f64 * progress;
    (x.round() as i64, y.round() as i64)
}

/// Deterministic speckle in [-amplitude, amplitude] for object-local
/// coordinates; rigid, so it translates with the object.
fn speckle(dx: usize, dy: usize, amplitude: u8) -> i16 {
    if amplitude == 0 {
        return 0;
    }
    let mut h = (dx as u64).wrapping_mul(0x517CC1B727220A95) ^ (dy as u64).wrapping_mul(0x2545F4914F6CDD1D);
    h ^= h >> 29;
    h = h.wrapping_mul(0xBF58476D1CE4E5B9);
    h ^= h >> 32;
    let span = 2 * amplitude as u64 + 1;
    (h % span) as i16 - amplitude as i16
}

fn draw_object(frame: &mut ColorFrame, o: &ObjectScript, t: usize) {
    let (ox, oy) = object_position(o, t);
    let (ow, oh) = o.size;
    for dy in 0..oh {
        for dx in 0..ow {
            if o.shape == Shape::Ellipse {
                let cx = dx as f64 + 0.5 - ow as f64 / 2.0;
                let cy = dy as f64 + 0.5 - oh as f64 / 2.0;
                let rx = ow as f64 / 2.0;
                let ry = oh as f64 / 2.0;
                if (cx / rx).powi(2) + (cy / ry).powi(2) > 1.0 {
                    continue;
                }
            }
            let x = (ox + dx as i64) as usize;
            let y = (oy + dy as i64) as usize;
            let dv = speckle(dx, dy, o.texture_amplitude);
            let mut color = o.color;
            if dv != 0 {
                for c in color.iter_mut() {
                    *c = (*c as i16 + dv).clamp(0, 255) as u8;
                }
            }
            *frame.pixel_mut(x, y) = color;
        }
    }
}

fn illumination_offset(scene: &SyntheticScene, t: usize, n_frames: usize) -> i16 {
    match scene.illumination {
        Illumination::None => 0,
        Illumination::Step { at, offset } => {
            if t >= at {
                offset
            } else {
                0
            }
        }
        Illumination::Ramp { offset } => {
            if n_frames <= 1 {
                offset
            } else {
                ((offset as f64) * t as f64 / (n_frames - 1) as f64).round() as i16
            }
        }
    }
}

fn apply_offset(frame: &mut ColorFrame, offset: i16) {
    if offset == 0 {
        return;
    }
    for p in frame.pixels_mut() {
        for c in p.iter_mut() {
            *c = (*c as i16 + offset).clamp(0, 255) as u8;
        }
    }
}

/// Renders `n_frames` frames plus the ground-truth background.
///
/// The ground truth is the clean background under the *final* frame's
/// illumination offset, because the pipeline favors the latest stable span.
/// Noise is drawn per frame from a stream seeded by (seed, frame index), so
/// output is bit-identical across runs and worker counts.
pub fn generate_synthetic(
    scene: &SyntheticScene,
    n_frames: usize,
    seed: u64,
) -> Result<(FrameSequence, ColorFrame)> {
    scene.validate()?;
    if n_frames == 0 {
        return Err(Error::InvalidScript("n_frames must be >= 1".into()));
    }
    for (i, o) in scene.objects.iter().enumerate() {
        if o.visible.0 >= n_frames {
            return Err(Error::InvalidScript(format!(
                "object {i} becomes visible at frame {} but only {n_frames} frames are rendered",
                o.visible.0
            )));
        }
    }

    let clean = render_background(scene);
    let mut frames = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let mut frame = clean.clone();
        for o in &scene.objects {
            if t >= o.visible.0 && t < o.visible.1 {
                draw_object(&mut frame, o, t);
            }
        }
        apply_offset(&mut frame, illumination_offset(scene, t, n_frames));
        if scene.noise_sigma > 0.0 {
            let normal = Normal::new(0.0, scene.noise_sigma)
                .map_err(|e| Error::InvalidScript(e.to_string()))?;
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed.wrapping_add((t as u64).wrapping_mul(0x9E3779B97F4A7C15)));
            for p in frame.pixels_mut() {
                for c in p.iter_mut() {
                    let delta: f64 = normal.sample(&mut rng);
                    *c = (*c as f64 + delta).round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        frames.push(frame);
    }

    let mut truth = clean;
    apply_offset(
        &mut truth,
        illumination_offset(scene, n_frames - 1, n_frames),
    );
    Ok((FrameSequence::new(frames)?, truth))
}
