use spmd_core::pipeline::run_spmd;
use spmd_core::synth::*;
use spmd_core::{metrics, PipelineConfig};

fn coverage(scene: &SyntheticScene, n: usize) -> (f64, u32, f64) {
    let mut clean = scene.clone();
    clean.noise_sigma = 0.0;
    let (frames, truth) = generate_synthetic(&clean, n, clean.seed).unwrap();
    let mut counts = vec![0u32; clean.width * clean.height];
    for t in 0..n {
        for (i, (a, b)) in frames[t].pixels().iter().zip(truth.pixels()).enumerate() {
            if a != b { counts[i] += 1; }
        }
    }
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / (counts.len() as f64 * n as f64);
    let worst = *counts.iter().max().unwrap();
    let nominal: usize = scene.objects.iter().map(|o| o.size.0 * o.size.1).sum();
    (mean, n as u32 - worst, nominal as f64 / (clean.width * clean.height) as f64)
}

fn clutter_scene(width_box: usize, span: i64, n: usize) -> SyntheticScene {
    let mut objects = Vec::new();
    for i in 0..10usize {
        let y = (17 * i) as i64;
        let gray = 40 + 20 * i as u8;
        let s = ((i * 29) % (320 - width_box - span as usize + 1)) as i64;
        let (from, to) = if i % 2 == 0 { (s, s + span) } else { (s + span, s) };
        objects.push(ObjectScript {
            shape: Shape::Rect,
            color: [gray, gray.saturating_add(15), gray.saturating_sub(10)],
            size: (width_box, 64),
            start: (from, y),
            end: (to, y),
            visible: (0, n),
            texture_amplitude: 35,
        });
    }
    SyntheticScene {
        width: 320, height: 240, frame_count: n, seed: 80, noise_sigma: 1.5,
        background: Background::Texture { low: [60, 70, 80], high: [230, 220, 235], scale: 18 },
        objects,
        illumination: Illumination::None,
    }
}

fn main() {
    let n = 100;
    for (wb, span) in [(72usize, 220i64), (88, 200), (88, 170), (100, 180), (100, 150), (110, 160)] {
        let scene = clutter_scene(wb, span, n);
        let (mean, worst_vis, nominal) = coverage(&scene, n);
        let (frames, truth) = generate_synthetic(&scene, n, scene.seed).unwrap();
        let artifacts = run_spmd(&frames, &PipelineConfig::default()).unwrap();
        let report = metrics::evaluate(&truth, &artifacts.background.color).unwrap();
        println!(
            "box {wb}x64 span {span}: union {:.2} nominal {:.2} worst-visible {} AGE {:.3} fallback {}",
            mean, nominal, worst_vis, report.age, artifacts.stats.fallback_pixels
        );
    }
}
