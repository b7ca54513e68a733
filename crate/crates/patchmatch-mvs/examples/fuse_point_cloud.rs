//! Estimate depth maps for a synthetic scene and fuse them into an oriented
//! point cloud.
//!
//! The fusion sweep keeps only pixels whose depths agree across views
//! (reprojection, relative depth and normal angle thresholds) and writes a
//! binary PLY readable by any point-cloud viewer.
//!
//! ```bash
//! cargo run --release --example fuse_point_cloud
//! ```

use patchmatch_mvs::fusion::{write_ply, FuseParams};
use patchmatch_mvs::pipeline::{self, PipelineConfig};
use patchmatch_mvs::synth;

fn main() -> anyhow::Result<()> {
    let out = std::path::Path::new("target/examples-output/fuse_point_cloud");
    std::fs::create_dir_all(out)?;

    println!("rendering a 3-view two-plane scene (192x144)...");
    let rendered = synth::render(&synth::preset_two_plane(192, 144, 3), 13)?;

    let cfg = PipelineConfig { smax: Some(1), seed: 2, ..Default::default() };
    println!("estimating...");
    let result = pipeline::run_estimate(rendered.scene.clone(), &cfg)?;
    let depths: Vec<_> = result.outputs.iter().map(|o| o.depth.clone()).collect();
    let normals: Vec<_> = result.outputs.iter().map(|o| o.normal.clone()).collect();

    let params = FuseParams::default();
    println!(
        "fusing (min views {}, reproj < {} px, rel depth < {}, normal < {} deg)...",
        params.min_consistent, params.max_reproj_error, params.max_rel_depth_diff, params.max_normal_angle_deg
    );
    let points = pipeline::run_fuse(rendered.scene.clone(), depths, normals, &params)?;

    let ply = out.join("cloud.ply");
    write_ply(&points, &ply)?;
    let mean_support =
        points.iter().map(|p| p.support as f64).sum::<f64>() / points.len().max(1) as f64;
    println!("{} points (mean support {:.2}) -> {}", points.len(), mean_support, ply.display());
    Ok(())
}
