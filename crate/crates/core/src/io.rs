//! Image and report I/O: PNG/JPEG ingestion of frame directories, PNG output,
//! debug dumps and metric report serialization.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Rgb};

use crate::error::{Error, Result};
use crate::frame::{ColorFrame, FrameSequence};
use crate::metrics::MetricReport;
use crate::motion::MotionMask;
use crate::slic::SuperpixelLabeling;

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];

/// Loads one image as a color frame.
pub fn load_image(path: impl AsRef<Path>) -> Result<ColorFrame> {
    let path = path.as_ref();
    let img = image::open(path)
        .map_err(|source| Error::Decode {
            path: path.to_path_buf(),
            source,
        })?
        .to_rgb8();
    let (w, h) = img.dimensions();
    let pixels = img.pixels().map(|p| p.0).collect();
    ColorFrame::new(w as usize, h as usize, pixels)
}

/// Loads a directory of numbered frames in lexicographic file-name order.
///
/// All frames must decode and share one resolution; the error names the first
/// offending file otherwise.
pub fn load_sequence(dir: impl AsRef<Path>) -> Result<FrameSequence> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyDirectory(dir.to_path_buf()));
    }

    let mut frames = Vec::with_capacity(paths.len());
    let mut dims = None;
    for path in &paths {
        let frame = load_image(path)?;
        match dims {
            None => dims = Some(frame.dims()),
            Some(expected) => {
                if frame.dims() != expected {
                    return Err(Error::dims_ctx(
                        expected,
                        frame.dims(),
                        path.display().to_string(),
                    ));
                }
            }
        }
        frames.push(frame);
    }
    FrameSequence::new(frames)
}

/// Writes a color frame as PNG.
pub fn save_png(frame: &ColorFrame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut img = ImageBuffer::<Rgb<u8>, Vec<u8>>::new(frame.width() as u32, frame.height() as u32);
    for (x, y, p) in img.enumerate_pixels_mut() {
        *p = Rgb(frame.pixel(x as usize, y as usize));
    }
    img.save(path).map_err(|source| Error::Encode {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a motion mask as a 1-bit PNG (1 = moving).
pub fn save_mask_png(mask: &MotionMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path)?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        mask.width() as u32,
        mask.height() as u32,
    );
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::One);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::InvalidParam(format!("png header: {e}")))?;

    let row_bytes = (mask.width() + 7) / 8;
    let mut data = vec![0u8; row_bytes * mask.height()];
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.is_moving(x, y) {
                data[y * row_bytes + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    writer
        .write_image_data(&data)
        .map_err(|e| Error::InvalidParam(format!("png data: {e}")))?;
    Ok(())
}

/// Writes the frame with superpixel boundaries overlaid in red.
pub fn save_labeling_overlay(
    frame: &ColorFrame,
    labeling: &SuperpixelLabeling,
    path: impl AsRef<Path>,
) -> Result<()> {
    if frame.dims() != labeling.dims() {
        return Err(Error::dims(frame.dims(), labeling.dims()));
    }
    let (w, h) = frame.dims();
    let mut overlay = frame.clone();
    for y in 0..h {
        for x in 0..w {
            let here = labeling.label(x, y);
            let boundary = (x + 1 < w && labeling.label(x + 1, y) != here)
                || (y + 1 < h && labeling.label(x, y + 1) != here);
            if boundary {
                *overlay.pixel_mut(x, y) = [255, 0, 0];
            }
        }
    }
    save_png(&overlay, path)
}

/// One entry of a metric report file.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SequenceReport {
    pub name: String,
    #[serde(flatten)]
    pub metrics: MetricReport,
}

impl SequenceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

const CSV_HEADER: &str = "name,age,peps,pceps,psnr,ms_ssim,cqm";

/// Appends one row to an aggregate CSV, writing the header when the file is
/// new or empty.
pub fn append_csv_row(path: impl AsRef<Path>, report: &SequenceReport) -> Result<()> {
    let path = path.as_ref();
    let needs_header = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    if needs_header {
        writeln!(file, "{CSV_HEADER}")?;
    }
    let m = &report.metrics;
    writeln!(
        file,
        "{},{},{},{},{},{},{}",
        report.name, m.age, m.peps, m.pceps, m.psnr, m.ms_ssim, m.cqm
    )?;
    Ok(())
}
