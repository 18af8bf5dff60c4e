//! Frame containers shared by every pipeline stage.
//!
//! All frames are row-major; pixel `(x, y)` lives at index `y * width + x`.

use crate::error::{Error, Result};

/// An 8-bit RGB frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorFrame {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl ColorFrame {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidParam(format!(
                "pixel buffer length {} does not match {width}x{height}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self::new(width, height, vec![rgb; width * height]).expect("positive dimensions")
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
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8; 3] {
        &mut self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.pixels
    }
}

/// An 8-bit single-channel frame (grayscale intensities or V channel).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidParam(format!(
                "pixel buffer length {} does not match {width}x{height}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("positive dimensions")
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
    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn max_value(&self) -> u8 {
        self.pixels.iter().copied().max().unwrap_or(0)
    }
}

/// A real-valued single-channel frame, used for smoothed intermediates.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayFrameF32 {
    width: usize,
    height: usize,
    pixels: Vec<f32>,
}

impl GrayFrameF32 {
    pub fn new(width: usize, height: usize, pixels: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidParam(format!(
                "pixel buffer length {} does not match {width}x{height}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
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
    pub fn pixel(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    /// Quantizes to 8 bits with round-half-up and clamping to [0, 255].
    pub fn to_u8(&self) -> GrayFrame {
        let pixels = self
            .pixels
            .iter()
            .map(|&v| (v + 0.5).floor().clamp(0.0, 255.0) as u8)
            .collect();
        GrayFrame::new(self.width, self.height, pixels).expect("dimensions preserved")
    }
}

/// An ordered sequence of color frames with uniform dimensions.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    frames: Vec<ColorFrame>,
}

impl FrameSequence {
    pub fn new(frames: Vec<ColorFrame>) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptySequence)?;
        let dims = first.dims();
        for (i, f) in frames.iter().enumerate() {
            if f.dims() != dims {
                return Err(Error::dims_ctx(dims, f.dims(), format!("frame {i}")));
            }
        }
        Ok(Self { frames })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    #[inline]
    pub fn frames(&self) -> &[ColorFrame] {
        &self.frames
    }

    /// A sub-range view as a new sequence (frames are cloned).
    pub fn slice(&self, start: usize, end_inclusive: usize) -> FrameSequence {
        FrameSequence {
            frames: self.frames[start..=end_inclusive].to_vec(),
        }
    }
}

impl std::ops::Index<usize> for FrameSequence {
    type Output = ColorFrame;

    fn index(&self, index: usize) -> &ColorFrame {
        &self.frames[index]
    }
}
