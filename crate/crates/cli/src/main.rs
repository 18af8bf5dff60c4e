use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use spmd_core::baseline::run_tmf;
use spmd_core::io;
use spmd_core::metrics;
use spmd_core::pipeline::{run_spmd, RunStats};
use spmd_core::synth::generate_synthetic;
use spmd_core::{ColorFrame, PipelineConfig, Provenance, SyntheticScene};

/// Background initialization from video frame sequences.
#[derive(Parser)]
#[command(name = "spmd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file (flat key = value, TOML syntax).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (overrides the config file).
    #[arg(long)]
    workers: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => PipelineConfig::default(),
        };
        if let Some(workers) = self.workers {
            config.workers = workers;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the background of a frame directory and write it as PNG.
    Estimate {
        /// Directory of numbered PNG/JPEG frames.
        in_dir: PathBuf,
        /// Output background image.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Dump per-frame motion masks, superpixel overlays and the
        /// provenance map into this directory.
        #[arg(long)]
        debug_dir: Option<PathBuf>,
    },
    /// Compare an estimated background against a ground-truth image.
    Evaluate {
        /// Estimated background image.
        estimate: PathBuf,
        /// Ground-truth background image.
        ground_truth: PathBuf,
        /// Write the six metrics as a JSON object to this file.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Sequence name recorded in the report (defaults to the estimate
        /// file stem).
        #[arg(long)]
        name: Option<String>,
        /// Append a row to this aggregate CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the pipeline and report per-stage throughput.
    Bench {
        /// Directory of numbered PNG/JPEG frames.
        in_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Render a synthetic scene script into frames plus ground truth.
    Synth {
        /// Scene script (TOML).
        scene: PathBuf,
        /// Output directory; frames land in <out-dir>/input/in000000.png ...
        /// with the clean background as <out-dir>/ground_truth.png.
        #[arg(long)]
        out_dir: PathBuf,
        /// Number of frames (defaults to the script's frame_count).
        #[arg(long)]
        frames: Option<usize>,
        /// Render seed (defaults to the script's seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate the background with the temporal-median baseline.
    BaselineTmf {
        /// Directory of numbered PNG/JPEG frames.
        in_dir: PathBuf,
        /// Output background image.
        #[arg(long)]
        out: PathBuf,
    },
}

fn print_stats(stats: &RunStats) {
    let line = |name: &str, secs: f64| {
        let fps = stats.frames_in as f64 / secs.max(1e-9);
        println!("{name:<14}{secs:>9.3} s {fps:>10.1} fps");
    };
    println!(
        "frames: {} (subsequence {}..{}, {} used)",
        stats.frames_in,
        stats.subsequence.0,
        stats.subsequence.1,
        stats.frames_used
    );
    if !stats.boundaries.is_empty() {
        println!("illumination boundaries at frames {:?}", stats.boundaries);
    }
    line("illumination", stats.stages.illumination.as_secs_f64());
    line("segmentation", stats.stages.segmentation.as_secs_f64());
    line("motion", stats.stages.motion.as_secs_f64());
    line("clustering", stats.stages.clustering.as_secs_f64());
    line("decision", stats.stages.decision.as_secs_f64());
    line("total", stats.total.as_secs_f64());
    println!("fallback pixels: {}", stats.fallback_pixels);
}

fn write_debug_dumps(
    dir: &Path,
    frames: &spmd_core::FrameSequence,
    artifacts: &spmd_core::RunArtifacts,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let start = artifacts.stats.subsequence.0;
    if let Some(debug) = &artifacts.debug {
        for (i, mask) in debug.masks.iter().enumerate() {
            io::save_mask_png(mask, dir.join(format!("mask{:06}.png", start + i)))?;
        }
        for (i, labeling) in debug.labelings.iter().enumerate() {
            io::save_labeling_overlay(
                &frames[start + i],
                labeling,
                dir.join(format!("superpixels{:06}.png", start + i)),
            )?;
        }
    }
    // Provenance map: fallback pixels in white.
    let (w, h) = (artifacts.background.color.width(), artifacts.background.color.height());
    let px = artifacts
        .background
        .provenance
        .iter()
        .map(|p| match p {
            Provenance::ClusterDecided => [0u8; 3],
            Provenance::Fallback => [255u8; 3],
        })
        .collect();
    io::save_png(&ColorFrame::new(w, h, px)?, dir.join("provenance.png"))?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Estimate {
            in_dir,
            out,
            config,
            debug_dir,
        } => {
            let mut config = config.load()?;
            if debug_dir.is_some() {
                config.debug_dumps = true;
            }
            let frames = io::load_sequence(&in_dir)
                .with_context(|| format!("loading frames from {}", in_dir.display()))?;
            let artifacts = run_spmd(&frames, &config)?;
            io::save_png(&artifacts.background.color, &out)?;
            if let Some(dir) = debug_dir {
                write_debug_dumps(&dir, &frames, &artifacts)?;
            }
            eprintln!(
                "estimated background from {} frames in {:.2} s ({:.1} fps), {} fallback pixels",
                artifacts.stats.frames_in,
                artifacts.stats.total.as_secs_f64(),
                artifacts.stats.fps(),
                artifacts.stats.fallback_pixels
            );
            println!("{}", out.display());
        }
        Command::Evaluate {
            estimate,
            ground_truth,
            json,
            name,
            csv,
        } => {
            let est = io::load_image(&estimate)?;
            let gt = io::load_image(&ground_truth)?;
            let report = io::SequenceReport {
                name: name.unwrap_or_else(|| {
                    estimate
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "estimate".into())
                }),
                metrics: metrics::evaluate(&gt, &est)?,
            };
            println!("{}", report.to_json());
            if let Some(path) = json {
                report.write_json(&path)?;
            }
            if let Some(path) = csv {
                io::append_csv_row(&path, &report)?;
            }
        }
        Command::Bench { in_dir, config } => {
            let config = config.load()?;
            let frames = io::load_sequence(&in_dir)
                .with_context(|| format!("loading frames from {}", in_dir.display()))?;
            let artifacts = run_spmd(&frames, &config)?;
            print_stats(&artifacts.stats);
        }
        Command::Synth {
            scene,
            out_dir,
            frames,
            seed,
        } => {
            let scene = SyntheticScene::load(&scene)
                .with_context(|| format!("loading scene {}", scene.display()))?;
            let n = frames.unwrap_or(scene.frame_count);
            let seed = seed.unwrap_or(scene.seed);
            let (sequence, truth) = generate_synthetic(&scene, n, seed)?;
            let input_dir = out_dir.join("input");
            std::fs::create_dir_all(&input_dir)?;
            for (t, frame) in sequence.frames().iter().enumerate() {
                io::save_png(frame, input_dir.join(format!("in{t:06}.png")))?;
            }
            io::save_png(&truth, out_dir.join("ground_truth.png"))?;
            eprintln!(
                "wrote {n} frames to {} and the clean ground_truth.png beside it",
                input_dir.display()
            );
        }
        Command::BaselineTmf { in_dir, out } => {
            let frames = io::load_sequence(&in_dir)
                .with_context(|| format!("loading frames from {}", in_dir.display()))?;
            let background = run_tmf(&frames)?;
            io::save_png(&background, &out)?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
