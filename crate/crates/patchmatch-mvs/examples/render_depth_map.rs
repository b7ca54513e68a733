//! Colormap a `.dmap` depth raster into a PNG.
//!
//! The mapping range defaults to the [2, 98] percentile interval of the
//! valid depths so a few outliers cannot flatten the interior contrast;
//! invalid pixels render black. This example writes a ground-truth raster
//! first so it is self-contained.
//!
//! ```bash
//! cargo run --example render_depth_map
//! ```

use patchmatch_mvs::pipeline::{percentile_range, render_depth_png};
use patchmatch_mvs::scene;
use patchmatch_mvs::synth;

fn main() -> anyhow::Result<()> {
    let out = std::path::Path::new("target/examples-output/render_depth_map");
    std::fs::create_dir_all(out)?;

    let rendered = synth::render(&synth::preset_two_plane(320, 240, 1), 5)?;
    let dmap = out.join("gt.depth.dmap");
    scene::write_raster(&dmap, &rendered.gt_depths[0])?;
    println!("wrote {}", dmap.display());

    let depth = scene::read_raster::<f32>(&dmap)?;
    let (lo, hi) = percentile_range(&depth, 0.02, 0.98)?;
    println!("valid depth percentiles: p2 = {lo:.3}, p98 = {hi:.3}");

    let png = out.join("gt.depth.png");
    render_depth_png(&depth, &png, None)?;
    println!("colormapped -> {}", png.display());

    // The same raster with a fixed range, for comparing several maps on one
    // scale.
    let png_fixed = out.join("gt.depth.fixed-range.png");
    render_depth_png(&depth, &png_fixed, Some((2.0, 10.0)))?;
    println!("fixed range [2, 10] -> {}", png_fixed.display());
    Ok(())
}
