//! Shared input builders for the stage benchmarks.

use spmd_core::synth::{Background, Illumination, ObjectScript, Shape, SyntheticScene};
use spmd_core::{ColorFrame, FrameSequence};

/// A textured scene with two moving boxes, sized like the smallest sequences
/// the pipeline targets.
pub fn benchmark_scene(width: usize, height: usize, frame_count: usize) -> SyntheticScene {
    SyntheticScene {
        width,
        height,
        frame_count,
        seed: 11,
        noise_sigma: 2.0,
        background: Background::Texture {
            low: [30, 40, 50],
            high: [170, 180, 190],
            scale: 14,
        },
        objects: vec![
            ObjectScript {
                shape: Shape::Rect,
                color: [210, 40, 40],
                size: (width / 8, height / 8),
                start: (2, 2),
                end: (
                    (width - width / 8 - 2) as i64,
                    (height - height / 8 - 2) as i64,
                ),
                visible: (0, frame_count),
                texture_amplitude: 0,
            },
            ObjectScript {
                shape: Shape::Ellipse,
                color: [40, 200, 60],
                size: (width / 6, height / 10),
                start: ((width - width / 6 - 2) as i64, 2),
                end: (2, (height - height / 10 - 2) as i64),
                visible: (0, frame_count),
                texture_amplitude: 0,
            },
        ],
        illumination: Illumination::None,
    }
}

pub fn benchmark_sequence(width: usize, height: usize, frame_count: usize) -> FrameSequence {
    let scene = benchmark_scene(width, height, frame_count);
    spmd_core::synth::generate_synthetic(&scene, frame_count, scene.seed)
        .expect("valid scene")
        .0
}

pub fn benchmark_frame(width: usize, height: usize) -> ColorFrame {
    benchmark_sequence(width, height, 1)[0].clone()
}
