//! Thin command-line front end over the library pipeline.

use clap::{Parser, Subcommand};
use patchmatch_mvs::error::{Error, Result};
use patchmatch_mvs::fusion::{write_ply, FuseParams};
use patchmatch_mvs::prior::AnchorGate;
use patchmatch_mvs::scene::load_scene;
use patchmatch_mvs::{pipeline, synth};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "mvs", version, about = "Multi-view stereo depth estimation and fusion")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate depth, normal and cost rasters for every view of a scene.
    Estimate {
        /// Scene directory (cameras.txt, images.txt, images/, optional range.txt).
        scene_dir: PathBuf,
        /// Output directory for the .dmap rasters.
        out_dir: PathBuf,
        /// Downscale inputs so the larger image dimension is at most this.
        #[arg(long, default_value_t = 3200)]
        max_dim: usize,
        /// Maximum window scale: `auto` or 0..3.
        #[arg(long, default_value = "auto")]
        smax: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Initial good-match cost threshold.
        #[arg(long, default_value_t = 0.8)]
        tau0: f64,
        /// Threshold decay constant.
        #[arg(long, default_value_t = 90.0)]
        alpha: f64,
        /// Weight of the geometric-consistency term.
        #[arg(long, default_value_t = 0.2)]
        eta: f64,
        /// Strength of the planar-prior penalty.
        #[arg(long, default_value_t = 0.3)]
        lambda_prior: f64,
        /// Width (relative depth) of the planar-prior penalty.
        #[arg(long, default_value_t = 0.05)]
        sigma_prior: f64,
        /// Anchor selection cell size in pixels.
        #[arg(long, default_value_t = 25)]
        cell: usize,
        /// Comma-separated stages to run: mpm,geom1,prior,geom2 (or `all`).
        #[arg(long, default_value = "mpm,geom1,prior,geom2")]
        stages: String,
        /// Gate for planar-prior anchors: `geometric` or `photometric`.
        #[arg(long, default_value = "geometric")]
        anchor_gate: String,
        /// Worker threads: `auto` or a count.
        #[arg(long, default_value = "auto")]
        threads: String,
    },
    /// Fuse estimated rasters into a point cloud.
    Fuse {
        scene_dir: PathBuf,
        /// Directory holding the `<stem>.depth.dmap` / `<stem>.normal.dmap` files.
        raster_dir: PathBuf,
        out_ply: PathBuf,
        /// Minimum number of agreeing views (reference included).
        #[arg(long, default_value_t = 2)]
        min_consistent: usize,
        /// Forward-backward reprojection bound in pixels.
        #[arg(long, default_value_t = 2.0)]
        max_reproj_err: f64,
        /// Relative depth difference bound.
        #[arg(long, default_value_t = 0.01)]
        max_rel_depth_diff: f64,
        /// Normal angle bound in degrees.
        #[arg(long, default_value_t = 30.0)]
        max_normal_deg: f64,
        #[arg(long, default_value = "auto")]
        threads: String,
    },
    /// Colormap a depth raster to a PNG.
    RenderDepth {
        raster: PathBuf,
        out_png: PathBuf,
        /// Lower end of the depth range (default: 2nd percentile).
        #[arg(long)]
        min: Option<f32>,
        /// Upper end of the depth range (default: 98th percentile).
        #[arg(long)]
        max: Option<f32>,
    },
    /// Render a synthetic scene description (JSON) into a scene directory.
    Synth {
        spec: PathBuf,
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_threads(s: &str) -> Result<Option<usize>> {
    if s == "auto" {
        return Ok(None);
    }
    let n: usize =
        s.parse().map_err(|_| Error::Config(format!("--threads expects `auto` or a count, got `{s}`")))?;
    if n == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    Ok(Some(n))
}

fn parse_smax(s: &str) -> Result<Option<u32>> {
    if s == "auto" {
        return Ok(None);
    }
    let v: u32 = s.parse().map_err(|_| Error::Config(format!("--smax expects `auto` or 0..3, got `{s}`")))?;
    if v > 3 {
        return Err(Error::Config("--smax must be at most 3".into()));
    }
    Ok(Some(v))
}

fn parse_gate(s: &str) -> Result<AnchorGate> {
    match s {
        "geometric" => Ok(AnchorGate::Geometric),
        "photometric" => Ok(AnchorGate::Photometric),
        other => Err(Error::Config(format!("--anchor-gate expects geometric|photometric, got `{other}`"))),
    }
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Estimate {
            scene_dir,
            out_dir,
            max_dim,
            smax,
            seed,
            tau0,
            alpha,
            eta,
            lambda_prior,
            sigma_prior,
            cell,
            stages,
            anchor_gate,
            threads,
        } => {
            let cfg = pipeline::PipelineConfig {
                max_dim,
                smax: parse_smax(&smax)?,
                seed,
                tau0,
                alpha,
                eta,
                lambda_prior,
                sigma_prior,
                cell,
                stages: pipeline::StageSet::parse(&stages)?,
                anchor_gate: parse_gate(&anchor_gate)?,
                ..Default::default()
            };
            let threads = parse_threads(&threads)?;
            let scene = load_scene(&scene_dir)?;
            eprintln!(
                "estimating {} views (stages {}, seed {seed})",
                scene.views.len(),
                cfg.stages
            );
            let start = Instant::now();
            let result = in_pool(threads, move || pipeline::run_estimate(scene, &cfg))?;
            for (out, st) in result.outputs.iter().zip(&result.stats) {
                if st.anchors > 0 {
                    eprintln!("view {}: anchors={} triangles={}", out.stem, st.anchors, st.triangles);
                }
            }
            pipeline::write_outputs(&result, &out_dir)?;
            eprintln!(
                "done: s_max={} elapsed={:.1}s outputs in {}",
                result.s_max,
                start.elapsed().as_secs_f64(),
                out_dir.display()
            );
            Ok(())
        }
        Cmd::Fuse {
            scene_dir,
            raster_dir,
            out_ply,
            min_consistent,
            max_reproj_err,
            max_rel_depth_diff,
            max_normal_deg,
            threads,
        } => {
            let params = FuseParams {
                min_consistent,
                max_reproj_error: max_reproj_err,
                max_rel_depth_diff,
                max_normal_angle_deg: max_normal_deg,
            };
            let threads = parse_threads(&threads)?;
            let scene = load_scene(&scene_dir)?;
            let (depths, normals) = pipeline::load_outputs(&scene, &raster_dir)?;
            let points =
                in_pool(threads, move || pipeline::run_fuse(scene, depths, normals, &params))?;
            write_ply(&points, &out_ply)?;
            eprintln!("fused {} points into {}", points.len(), out_ply.display());
            Ok(())
        }
        Cmd::RenderDepth { raster, out_png, min, max } => {
            let depth = patchmatch_mvs::scene::read_raster::<f32>(&raster)?;
            let range = match (min, max) {
                (Some(lo), Some(hi)) => Some((lo, hi)),
                (None, None) => None,
                _ => {
                    return Err(Error::Config("--min and --max must be given together".into()));
                }
            };
            pipeline::render_depth_png(&depth, &out_png, range)?;
            eprintln!("wrote {}", out_png.display());
            Ok(())
        }
        Cmd::Synth { spec, out_dir, seed } => {
            let text = std::fs::read_to_string(&spec)?;
            let spec: synth::SceneSpec = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("scene spec: {e}")))?;
            let rendered = synth::render(&spec, seed)?;
            synth::write_scene_dir(&rendered, &out_dir)?;
            eprintln!(
                "rendered {} views of {} planes into {}",
                rendered.scene.views.len(),
                spec.planes.len(),
                out_dir.display()
            );
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}: {e}", e.class());
        std::process::exit(1);
    }
}
