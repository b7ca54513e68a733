//! Scene ingestion and raster I/O.
//!
//! A scene directory holds `cameras.txt` and `images.txt` (COLMAP PINHOLE
//! text schema), an `images/` folder of PNG/PGM/PPM files and an optional
//! `range.txt` with the depth search interval (`d_min d_max`). Color inputs
//! are converted to luminance on load.

mod camera;
pub mod colmap;
pub mod dmap;
mod image;
mod raster;

pub use camera::CameraModel;
pub use dmap::{read_raster, write_raster};
pub use image::GrayImage;
pub use raster::{DepthRaster, Raster};

use crate::error::{Error, Result};
use std::path::Path;

/// Default depth search interval when a scene ships no `range.txt`.
pub const DEFAULT_DEPTH_RANGE: (f64, f64) = (0.1, 100.0);

/// One calibrated view: camera, luminance image, source file name.
#[derive(Debug, Clone)]
pub struct View {
    pub name: String,
    pub camera: CameraModel,
    pub image: GrayImage,
}

impl View {
    /// File stem used to name per-view output rasters.
    pub fn stem(&self) -> &str {
        Path::new(&self.name).file_stem().and_then(|s| s.to_str()).unwrap_or(&self.name)
    }
}

/// A calibrated multi-view scene.
#[derive(Debug, Clone)]
pub struct Scene {
    pub views: Vec<View>,
    /// Depth hypothesis interval `(d_min, d_max)` in scene units.
    pub depth_range: (f64, f64),
}

/// Load a scene directory.
///
/// Camera intrinsics are rescaled proportionally when the image files on
/// disk are a downscaled copy of the calibrated resolution (common when a
/// dataset ships reduced images with full-resolution calibration).
pub fn load_scene(dir: &Path) -> Result<Scene> {
    let cameras_path = dir.join("cameras.txt");
    let images_path = dir.join("images.txt");
    for p in [&cameras_path, &images_path] {
        if !p.is_file() {
            return Err(Error::MissingFile(p.clone()));
        }
    }
    let cameras = colmap::parse_cameras(&std::fs::read_to_string(&cameras_path)?)?;
    let entries = colmap::parse_images(&std::fs::read_to_string(&images_path)?)?;
    if entries.is_empty() {
        return Err(Error::Scene("images.txt lists no images".into()));
    }
    let named = colmap::assemble_cameras(&cameras, &entries)?;

    let mut views = Vec::with_capacity(named.len());
    for (name, camera) in named {
        let img_path = dir.join("images").join(&name);
        if !img_path.is_file() {
            return Err(Error::MissingFile(img_path));
        }
        let image = GrayImage::load(&img_path)?;
        let camera = adapt_camera_to_image(camera, image.width(), image.height())?;
        views.push(View { name, camera, image });
    }

    let depth_range = match std::fs::read_to_string(dir.join("range.txt")) {
        Ok(text) => parse_range(&text)?,
        Err(_) => DEFAULT_DEPTH_RANGE,
    };
    Ok(Scene { views, depth_range })
}

fn parse_range(text: &str) -> Result<(f64, f64)> {
    let nums: Vec<f64> = text.split_whitespace().filter_map(|t| t.parse().ok()).collect();
    if nums.len() != 2 || !(nums[0] > 0.0 && nums[0] < nums[1]) {
        return Err(Error::Scene("range.txt must hold two floats 0 < d_min < d_max".into()));
    }
    Ok((nums[0], nums[1]))
}

fn adapt_camera_to_image(cam: CameraModel, img_w: usize, img_h: usize) -> Result<CameraModel> {
    if cam.width == img_w && cam.height == img_h {
        return Ok(cam);
    }
    let sx = img_w as f64 / cam.width as f64;
    let sy = img_h as f64 / cam.height as f64;
    if (sx - sy).abs() / sx > 0.01 {
        return Err(Error::Scene(format!(
            "image {img_w}x{img_h} does not match calibration {}x{} (aspect changed)",
            cam.width, cam.height
        )));
    }
    Ok(cam.scaled(sx, sy, img_w, img_h))
}

/// Downsample every view so that its larger dimension is at most `max_dim`,
/// with an area-averaging filter. Intrinsics are scaled by the same uniform
/// ratio on both axes, so repeated rescaling composes exactly.
pub fn rescale_to_max_dim(scene: Scene, max_dim: usize) -> Scene {
    assert!(max_dim >= 64, "max_dim must be at least 64");
    let views = scene
        .views
        .into_iter()
        .map(|v| {
            let (w, h) = (v.camera.width, v.camera.height);
            let big = w.max(h);
            if big <= max_dim {
                return v;
            }
            let s = max_dim as f64 / big as f64;
            let new_w = ((w as f64 * s).round() as usize).max(1);
            let new_h = ((h as f64 * s).round() as usize).max(1);
            View {
                camera: v.camera.scaled(s, s, new_w, new_h),
                image: v.image.downsample_to(new_w, new_h),
                name: v.name,
            }
        })
        .collect();
    Scene { views, depth_range: scene.depth_range }
}
