//! Colormapped depth rendering for inspection.

use crate::error::{Error, Result};
use crate::scene::DepthRaster;
use std::path::Path;

/// Anchor colors of the 256-entry table, dark-to-bright with monotone
/// perceived lightness (a compact approximation of the familiar
/// purple-teal-yellow sequential map). The full table is linear
/// interpolation between these, emitted by [`colormap_table`].
const ANCHORS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// The 256-entry colormap; index 0 is nearest (darkest), 255 farthest.
pub fn colormap_table() -> [[u8; 3]; 256] {
    let mut table = [[0u8; 3]; 256];
    let segments = ANCHORS.len() - 1;
    for (i, entry) in table.iter_mut().enumerate() {
        let t = i as f64 / 255.0 * segments as f64;
        let seg = (t.floor() as usize).min(segments - 1);
        let f = t - seg as f64;
        for c in 0..3 {
            let v = ANCHORS[seg][c] * (1.0 - f) + ANCHORS[seg + 1][c] * f;
            entry[c] = v.round() as u8;
        }
    }
    table
}

/// Map a depth raster into the colormap and save a PNG. The mapping range
/// defaults to the [2, 98] percentile interval of the valid depths, which
/// keeps a few extreme outliers from flattening the interior contrast;
/// invalid pixels render black.
pub fn render_depth_png(depth: &DepthRaster, path: &Path, range: Option<(f32, f32)>) -> Result<()> {
    let (lo, hi) = match range {
        Some(r) => r,
        None => percentile_range(depth, 0.02, 0.98)?,
    };
    let table = colormap_table();
    let span = (hi - lo).max(0.0);
    let mut img = image::RgbImage::new(depth.width() as u32, depth.height() as u32);
    for (x, y, px) in img.enumerate_pixels_mut() {
        px.0 = match depth.depth_at(x as usize, y as usize) {
            None => [0, 0, 0],
            Some(d) => {
                let t = if span > 0.0 { ((d - lo) / span).clamp(0.0, 1.0) } else { 0.5 };
                table[(t * 255.0).round() as usize]
            }
        };
    }
    img.save(path)?;
    Ok(())
}

/// Percentile interval of the valid depths (nearest-rank).
pub fn percentile_range(depth: &DepthRaster, lo_q: f64, hi_q: f64) -> Result<(f32, f32)> {
    let mut valid: Vec<f32> = depth.values().iter().copied().filter(|v| !v.is_nan()).collect();
    if valid.is_empty() {
        return Err(Error::Raster("cannot render an all-invalid depth raster".into()));
    }
    valid.sort_by(f32::total_cmp);
    let rank = |q: f64| {
        let idx = ((q * valid.len() as f64).ceil() as usize).clamp(1, valid.len()) - 1;
        valid[idx]
    };
    Ok((rank(lo_q), rank(hi_q)))
}
