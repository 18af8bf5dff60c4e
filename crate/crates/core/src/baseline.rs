//! Temporal median filter baseline.

use rayon::prelude::*;

use crate::error::Result;
use crate::frame::{ColorFrame, FrameSequence};

/// Per-pixel, per-channel temporal median over all frames (lower median for
/// even counts). Tolerates foreground as long as it covers a pixel in fewer
/// than half of the frames.
pub fn run_tmf(frames: &FrameSequence) -> Result<ColorFrame> {
    let (w, h) = frames.dims();
    let n = frames.len();
    let rows: Vec<Vec<[u8; 3]>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut row = Vec::with_capacity(w);
            let mut channel = vec![0u8; n];
            for x in 0..w {
                let mut out = [0u8; 3];
                for c in 0..3 {
                    for (t, slot) in channel.iter_mut().enumerate() {
                        *slot = frames[t].pixel(x, y)[c];
                    }
                    channel.sort_unstable();
                    out[c] = channel[(n - 1) / 2];
                }
                row.push(out);
            }
            row
        })
        .collect();
    let pixels = rows.into_iter().flatten().collect();
    ColorFrame::new(w, h, pixels)
}
