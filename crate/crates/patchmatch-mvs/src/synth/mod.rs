//! Synthetic piecewise-planar scenes with analytic ground truth.
//!
//! Every rendered pixel's depth is the exact ray-plane intersection of the
//! nearest plane, so estimation error can be separated from rendering error.
//! The renderer emits in-memory scenes for tests and loadable scene
//! directories (images, camera text files, depth range, ground-truth
//! `.dmap` rasters) for the CLI.

mod texture;

pub use texture::Texture;

use crate::error::{Error, Result};
use crate::geometry;
use crate::scene::{self, CameraModel, DepthRaster, GrayImage, Raster, Scene, View};
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Camera placement: position looking at a target point. `up` is the world
/// direction that should appear toward the top of the image (the renderer
/// uses the computer-vision frame: image y runs down).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraSpec {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub up: [f64; 3],
}

/// An infinite textured plane `normal . (x - point) = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneSpec {
    pub point: [f64; 3],
    pub normal: [f64; 3],
    pub texture: Texture,
}

/// Scene description; serializable so the CLI can generate scenes from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Focal length in pixels (fx = fy), principal point at the center.
    pub focal: f64,
    pub depth_range: (f64, f64),
    pub cameras: Vec<CameraSpec>,
    pub planes: Vec<PlaneSpec>,
}

/// A rendered scene plus per-view ground truth.
pub struct RenderedScene {
    pub scene: Scene,
    pub gt_depths: Vec<DepthRaster>,
    /// Ground-truth plane normals in each view's camera frame; NaN where a
    /// ray hits nothing.
    pub gt_normals: Vec<Raster<[f32; 3]>>,
}

fn camera_from_spec(spec: &CameraSpec, width: usize, height: usize, focal: f64) -> Result<CameraModel> {
    let eye = Vector3::from(spec.position);
    let target = Vector3::from(spec.look_at);
    let up = Vector3::from(spec.up);
    let forward = target - eye;
    if forward.norm() < 1e-12 {
        return Err(Error::Config("camera looks at its own position".into()));
    }
    let z = forward.normalize();
    let mut y = -up;
    y -= z * y.dot(&z);
    if y.norm() < 1e-9 {
        return Err(Error::Config("camera up direction parallel to view direction".into()));
    }
    y.normalize_mut();
    let x = y.cross(&z);
    let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    let translation = -(rotation * eye);
    let cam = CameraModel {
        fx: focal,
        fy: focal,
        cx: width as f64 / 2.0,
        cy: height as f64 / 2.0,
        rotation,
        translation,
        width,
        height,
    };
    cam.validate()?;
    Ok(cam)
}

struct PreparedPlane {
    point: Vector3<f64>,
    normal: Vector3<f64>,
    e1: Vector3<f64>,
    e2: Vector3<f64>,
    texture: Texture,
    seed: u64,
}

impl PreparedPlane {
    fn new(spec: &PlaneSpec, seed: u64, index: usize) -> Result<PreparedPlane> {
        let normal = Vector3::from(spec.normal);
        if normal.norm() < 1e-12 {
            return Err(Error::Config("plane normal must be nonzero".into()));
        }
        let normal = normal.normalize();
        // Deterministic in-plane frame: take the axis least aligned with the
        // normal as helper.
        let abs = normal.map(f64::abs);
        let helper = if abs.x <= abs.y && abs.x <= abs.z {
            Vector3::x()
        } else if abs.y <= abs.z {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let e1 = normal.cross(&helper).normalize();
        let e2 = normal.cross(&e1);
        Ok(PreparedPlane {
            point: Vector3::from(spec.point),
            normal,
            e1,
            e2,
            texture: spec.texture.clone(),
            seed: seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        })
    }
}

/// Render all views of a scene description. Deterministic given the seed.
pub fn render(spec: &SceneSpec, seed: u64) -> Result<RenderedScene> {
    if spec.cameras.is_empty() || spec.planes.is_empty() {
        return Err(Error::Config("scene needs at least one camera and one plane".into()));
    }
    if !(spec.depth_range.0 > 0.0 && spec.depth_range.0 < spec.depth_range.1) {
        return Err(Error::Config("depth range must satisfy 0 < d_min < d_max".into()));
    }
    let planes: Vec<PreparedPlane> = spec
        .planes
        .iter()
        .enumerate()
        .map(|(i, p)| PreparedPlane::new(p, seed, i))
        .collect::<Result<_>>()?;

    let mut views = Vec::new();
    let mut gt_depths = Vec::new();
    let mut gt_normals = Vec::new();
    for (ci, cspec) in spec.cameras.iter().enumerate() {
        let cam = camera_from_spec(cspec, spec.width, spec.height, spec.focal)?;
        let n = spec.width * spec.height;
        let rows: Vec<(f32, f32, [f32; 3])> = (0..n)
            .into_par_iter()
            .map(|idx| {
                let (x, y) = (idx % spec.width, idx / spec.width);
                render_pixel(&cam, &planes, (x as f64, y as f64))
            })
            .collect();
        let mut img = Vec::with_capacity(n);
        let mut dep = Vec::with_capacity(n);
        let mut nor = Vec::with_capacity(n);
        let mut hits = 0usize;
        for (i, d, nrm) in rows {
            if !d.is_nan() {
                hits += 1;
            }
            img.push(i);
            dep.push(d);
            nor.push(nrm);
        }
        if hits == 0 {
            return Err(Error::Config(format!("camera {ci} sees no geometry")));
        }
        views.push(View {
            name: format!("view{ci:03}.png"),
            camera: cam,
            image: GrayImage::new(spec.width, spec.height, img),
        });
        gt_depths.push(Raster::from_vec(spec.width, spec.height, dep));
        gt_normals.push(Raster::from_vec(spec.width, spec.height, nor));
    }
    Ok(RenderedScene {
        scene: Scene { views, depth_range: spec.depth_range },
        gt_depths,
        gt_normals,
    })
}

fn render_pixel(cam: &CameraModel, planes: &[PreparedPlane], p: (f64, f64)) -> (f32, f32, [f32; 3]) {
    let ray_cam = geometry::ray_direction(cam, p);
    let dir_world = cam.rotation.transpose() * ray_cam;
    let origin = cam.center();
    let mut best_t = f64::INFINITY;
    let mut best: Option<&PreparedPlane> = None;
    for plane in planes {
        let denom = plane.normal.dot(&dir_world);
        if denom.abs() < 1e-12 {
            continue;
        }
        let t = plane.normal.dot(&(plane.point - origin)) / denom;
        if t > 1e-9 && t < best_t {
            best_t = t;
            best = Some(plane);
        }
    }
    match best {
        None => (0.0, f32::NAN, [f32::NAN; 3]),
        Some(plane) => {
            let hit = origin + best_t * dir_world;
            let rel = hit - plane.point;
            let intensity = plane.texture.sample(plane.seed, rel.dot(&plane.e1), rel.dot(&plane.e2));
            // ray_cam.z == 1, so the ray parameter is the camera z-depth.
            let mut n_cam = cam.rotation * plane.normal;
            if n_cam.dot(&ray_cam) > 0.0 {
                n_cam = -n_cam;
            }
            (intensity as f32, best_t as f32, [n_cam.x as f32, n_cam.y as f32, n_cam.z as f32])
        }
    }
}

/// Write a rendered scene as a loadable scene directory plus ground-truth
/// `.dmap` rasters under `gt/`.
pub fn write_scene_dir(rendered: &RenderedScene, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir.join("images"))?;
    std::fs::create_dir_all(dir.join("gt"))?;
    let named: Vec<(String, CameraModel)> =
        rendered.scene.views.iter().map(|v| (v.name.clone(), v.camera.clone())).collect();
    scene::colmap::write_scene_text(dir, &named)?;
    std::fs::write(
        dir.join("range.txt"),
        format!("{} {}\n", rendered.scene.depth_range.0, rendered.scene.depth_range.1),
    )?;
    for (i, view) in rendered.scene.views.iter().enumerate() {
        view.image.save_png16(&dir.join("images").join(&view.name))?;
        let stem = view.stem();
        scene::write_raster(&dir.join("gt").join(format!("{stem}.depth.dmap")), &rendered.gt_depths[i])?;
        scene::write_raster(&dir.join("gt").join(format!("{stem}.normal.dmap")), &rendered.gt_normals[i])?;
    }
    Ok(())
}

/// Relative-error summary of a depth estimate against ground truth over a
/// pixel mask.
pub struct ErrorReport {
    /// Sorted relative errors of valid estimates inside the mask.
    errors: Vec<f64>,
    mask_count: usize,
}

impl ErrorReport {
    pub fn coverage(&self) -> f64 {
        self.errors.len() as f64 / self.mask_count as f64
    }

    pub fn median_rel_err(&self) -> f64 {
        if self.errors.is_empty() {
            return f64::NAN;
        }
        self.errors[self.errors.len() / 2]
    }

    /// Fraction of valid estimates whose relative error exceeds `tau_rel`.
    pub fn bad_pixel_fraction(&self, tau_rel: f64) -> f64 {
        if self.errors.is_empty() {
            return 1.0;
        }
        let bad = self.errors.len() - self.errors.partition_point(|&e| e <= tau_rel);
        bad as f64 / self.errors.len() as f64
    }

    pub fn valid_count(&self) -> usize {
        self.errors.len()
    }
}

/// Compare an estimated depth raster against ground truth inside `mask`.
/// Mask pixels without ground truth are skipped; mask pixels the estimate
/// left invalid count against coverage.
pub fn depth_error_report(
    estimate: &DepthRaster,
    gt: &DepthRaster,
    mask: &Raster<bool>,
) -> Result<ErrorReport> {
    assert_eq!((estimate.width(), estimate.height()), (gt.width(), gt.height()));
    assert_eq!((mask.width(), mask.height()), (gt.width(), gt.height()));
    let mut errors = Vec::new();
    let mut mask_count = 0usize;
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if !mask.get(x, y) {
                continue;
            }
            let Some(d_gt) = gt.depth_at(x, y) else { continue };
            mask_count += 1;
            if let Some(d) = estimate.depth_at(x, y) {
                errors.push(((d as f64) - (d_gt as f64)).abs() / d_gt as f64);
            }
        }
    }
    if mask_count == 0 {
        return Err(Error::Config("empty evaluation mask".into()));
    }
    errors.sort_by(f64::total_cmp);
    Ok(ErrorReport { errors, mask_count })
}

/// Pixels of view `view_idx` whose ground-truth surface point is also seen
/// by at least one other view (projects in bounds with a consistent
/// ground-truth depth there).
pub fn covisibility_mask(rendered: &RenderedScene, view_idx: usize) -> Raster<bool> {
    let cam = &rendered.scene.views[view_idx].camera;
    let gt = &rendered.gt_depths[view_idx];
    let mut mask = Raster::new(cam.width, cam.height, false);
    for y in 0..cam.height {
        for x in 0..cam.width {
            let Some(d) = gt.depth_at(x, y) else { continue };
            let x_world = geometry::cam_to_world(cam, &geometry::unproject(cam, (x as f64, y as f64), d as f64));
            'views: for (j, other) in rendered.scene.views.iter().enumerate() {
                if j == view_idx {
                    continue;
                }
                let x_other = geometry::world_to_cam(&other.camera, &x_world);
                if let Some(p) = geometry::project(&other.camera, &x_other) {
                    let (px, py) = (p.0.round(), p.1.round());
                    if rendered.gt_depths[j].in_bounds(px as i64, py as i64) {
                        if let Some(d_other) = rendered.gt_depths[j].depth_at(px as usize, py as usize) {
                            if ((d_other as f64 - x_other.z) / x_other.z).abs() < 0.01 {
                                mask.set(x, y, true);
                                break 'views;
                            }
                        }
                    }
                }
            }
        }
    }
    mask
}

/// Pixels of `view` whose ground-truth surface point falls inside the flat
/// rectangle of the scene's `UntexturedPatch` texture, eroded by `erode_px`
/// pixels so window footprints straddling the texture boundary drop out.
/// Returns an all-false mask when no plane carries such a texture.
pub fn untextured_patch_mask(
    rendered: &RenderedScene,
    spec: &SceneSpec,
    view: usize,
    erode_px: f64,
) -> Raster<bool> {
    let cam = &rendered.scene.views[view].camera;
    let gt = &rendered.gt_depths[view];
    let mut mask = Raster::new(cam.width, cam.height, false);
    struct PatchRegion {
        plane: PreparedPlane,
        center: (f64, f64),
        half: (f64, f64),
    }
    let patches: Vec<PatchRegion> = spec
        .planes
        .iter()
        .enumerate()
        .filter_map(|(i, p)| match &p.texture {
            Texture::UntexturedPatch { center, half_extent, .. } => Some(PatchRegion {
                plane: PreparedPlane::new(p, 0, i).ok()?,
                center: *center,
                half: *half_extent,
            }),
            _ => None,
        })
        .collect();
    if patches.is_empty() {
        return mask;
    }
    for y in 0..cam.height {
        for x in 0..cam.width {
            let Some(d) = gt.depth_at(x, y) else { continue };
            let erode = erode_px * d as f64 / cam.fx;
            let xw = geometry::cam_to_world(cam, &geometry::unproject(cam, (x as f64, y as f64), d as f64));
            for region in &patches {
                let plane = &region.plane;
                if plane.normal.dot(&(xw - plane.point)).abs() > 1e-6 {
                    continue; // point is on another plane
                }
                let rel = xw - plane.point;
                let u = rel.dot(&plane.e1);
                let v = rel.dot(&plane.e2);
                if (u - region.center.0).abs() <= region.half.0 - erode
                    && (v - region.center.1).abs() <= region.half.1 - erode
                {
                    mask.set(x, y, true);
                }
            }
        }
    }
    mask
}

// ---------------------------------------------------------------------------
// Presets used by the examples and the test suite.
// ---------------------------------------------------------------------------

fn camera_arc(n_views: usize, baseline: f64, target_depth: f64) -> Vec<CameraSpec> {
    (0..n_views)
        .map(|i| {
            let offset = (i as f64 - (n_views as f64 - 1.0) / 2.0) * baseline;
            CameraSpec {
                position: [offset, 0.0, 0.0],
                look_at: [0.0, 0.0, target_depth],
                up: [0.0, -1.0, 0.0],
            }
        })
        .collect()
}

/// A noise-textured fronto plane observed by a small camera arc.
pub fn preset_textured_plane(width: usize, height: usize, n_views: usize) -> SceneSpec {
    let depth = 5.0;
    let focal = width as f64 * 0.9;
    SceneSpec {
        width,
        height,
        focal,
        depth_range: (depth * 0.4, depth * 2.4),
        cameras: camera_arc(n_views, 0.45, depth),
        planes: vec![PlaneSpec {
            point: [0.0, 0.0, depth],
            normal: [0.0, 0.0, -1.0],
            texture: Texture::Noise { cell: 6.0 * depth / focal, amplitude: 0.9 },
        }],
    }
}

/// The textured plane with a flat (untextured) square patch of `patch_px`
/// pixels at the image center of the middle view.
pub fn preset_untextured_center(width: usize, height: usize, n_views: usize, patch_px: usize) -> SceneSpec {
    let mut spec = preset_textured_plane(width, height, n_views);
    let depth = 5.0;
    let half = patch_px as f64 / 2.0 * depth / spec.focal;
    spec.planes[0].texture = Texture::UntexturedPatch {
        cell: 6.0 * depth / spec.focal,
        amplitude: 0.9,
        center: (0.0, 0.0),
        half_extent: (half, half),
        patch_value: 0.5,
    };
    spec
}

/// An oblique plane meeting a fronto back wall: exercises normals away from
/// the optical axis and a depth discontinuity.
pub fn preset_two_plane(width: usize, height: usize, n_views: usize) -> SceneSpec {
    let depth = 5.0;
    let focal = width as f64 * 0.9;
    SceneSpec {
        width,
        height,
        focal,
        depth_range: (1.5, 14.0),
        cameras: camera_arc(n_views, 0.45, depth),
        planes: vec![
            PlaneSpec {
                point: [0.0, 0.8, 4.2],
                normal: [0.0, -0.8, -0.6],
                texture: Texture::Noise { cell: 6.0 * depth / focal, amplitude: 0.9 },
            },
            PlaneSpec {
                point: [0.0, 0.0, 7.0],
                normal: [0.0, 0.0, -1.0],
                texture: Texture::Checker { period: 10.0 * depth / focal, low: 0.25, high: 0.85 },
            },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fronto_flat_plane_renders_constant_depth() {
        let mut spec = preset_textured_plane(64, 48, 1);
        spec.planes[0].texture = Texture::Flat { value: 0.5 };
        let r = render(&spec, 1).unwrap();
        let d0 = r.gt_depths[0].depth_at(32, 24).unwrap();
        assert!((d0 - 5.0).abs() < 1e-6);
        for y in 0..48 {
            for x in 0..64 {
                let d = r.gt_depths[0].depth_at(x, y).unwrap();
                assert!((d - d0).abs() < 1e-5, "depth varies at {x},{y}");
            }
        }
        for v in r.scene.views[0].image.data() {
            assert_eq!(*v, 0.5);
        }
    }

    #[test]
    fn gt_normals_match_plane_normals() {
        let spec = preset_textured_plane(32, 24, 2);
        let r = render(&spec, 1).unwrap();
        for (vi, view) in r.scene.views.iter().enumerate() {
            let n_world = Vector3::new(0.0, 0.0, -1.0);
            let expect = view.camera.rotation * n_world;
            let n = r.gt_normals[vi].get(10, 10);
            let got = Vector3::new(n[0] as f64, n[1] as f64, n[2] as f64);
            assert!((got - expect).norm() < 1e-6 || (got + expect).norm() < 1e-6);
            assert!((got.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn warp_via_gt_homography_reproduces_other_view() {
        // Coarse low-amplitude noise keeps the bilinear interpolation error
        // of the comparison itself below the tolerance; the warp is exact.
        let mut spec = preset_textured_plane(160, 120, 2);
        spec.planes[0].texture = Texture::Noise { cell: 16.0 * 5.0 / spec.focal, amplitude: 0.5 };
        let r = render(&spec, 7).unwrap();
        let a = &r.scene.views[0];
        let b = &r.scene.views[1];
        // True plane in view A's camera frame.
        let n_cam = a.camera.rotation * Vector3::new(0.0, 0.0, -1.0);
        let p_cam = geometry::world_to_cam(&a.camera, &Vector3::new(0.0, 0.0, 5.0));
        let center = (80.0, 60.0);
        let depth = r.gt_depths[0].depth_at(80, 60).unwrap() as f64;
        let n = if n_cam.dot(&geometry::ray_direction(&a.camera, center)) > 0.0 { -n_cam } else { n_cam };
        // Verify the anchored depth matches: n.(d*ray) = n.p_cam.
        let plane = crate::geometry::PlaneHypothesis::new(n, depth);
        let h = geometry::homography_from_plane(&a.camera, &b.camera, center, &plane).unwrap();
        let mut se = 0.0f64;
        let mut count = 0usize;
        for y in (10..110).step_by(3) {
            for x in (10..150).step_by(3) {
                if let Some(q) = geometry::warp(&h, (x as f64, y as f64)) {
                    if let Some(v) = b.image.bilinear(q.0, q.1) {
                        let d = v - a.image.get(x, y) as f64;
                        se += d * d;
                        count += 1;
                    }
                }
            }
        }
        assert!(count > 500);
        let rms = (se / count as f64).sqrt();
        assert!(rms < 1e-3, "rms = {rms}");
        let _ = p_cam;
    }

    #[test]
    fn renderer_self_consistency_forward_backward() {
        let spec = preset_textured_plane(96, 72, 2);
        let r = render(&spec, 3).unwrap();
        let a = &r.scene.views[0];
        let b = &r.scene.views[1];
        let mask = covisibility_mask(&r, 0);
        let mut checked = 0;
        for y in (2..70).step_by(5) {
            for x in (2..94).step_by(5) {
                if !mask.get(x, y) {
                    continue;
                }
                let d = r.gt_depths[0].depth_at(x, y).unwrap() as f64;
                let e = geometry::forward_backward_error(
                    &a.camera,
                    &b.camera,
                    (x as f64, y as f64),
                    d,
                    &r.gt_depths[1],
                );
                assert!(e < 1e-4, "fb error {e} at {x},{y}");
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn error_report_basics() {
        let gt = Raster::new(10, 10, 2.0f32);
        let mask = Raster::new(10, 10, true);
        let exact = depth_error_report(&gt, &gt, &mask).unwrap();
        assert_eq!(exact.median_rel_err(), 0.0);
        assert_eq!(exact.bad_pixel_fraction(0.02), 0.0);
        assert_eq!(exact.coverage(), 1.0);

        let scaled = Raster::new(10, 10, 2.0f32 * 1.01);
        let rep = depth_error_report(&scaled, &gt, &mask).unwrap();
        assert!((rep.median_rel_err() - 0.01).abs() < 1e-6);

        let mut holey = gt.clone();
        let mut dropped = 0;
        for (i, v) in holey.values_mut().iter_mut().enumerate() {
            if i % 10 < 3 {
                *v = DepthRaster::INVALID;
                dropped += 1;
            }
        }
        let rep = depth_error_report(&holey, &gt, &mask).unwrap();
        assert!((rep.coverage() - (100 - dropped) as f64 / 100.0).abs() < 1e-9);
    }

    #[test]
    fn scene_dir_round_trips_cameras() {
        let dir = tempfile::tempdir().unwrap();
        let spec = preset_textured_plane(64, 48, 3);
        let r = render(&spec, 11).unwrap();
        write_scene_dir(&r, dir.path()).unwrap();
        let loaded = scene::load_scene(dir.path()).unwrap();
        assert_eq!(loaded.views.len(), 3);
        assert_eq!(loaded.depth_range, spec.depth_range);
        for (a, b) in loaded.views.iter().zip(&r.scene.views) {
            assert!((a.camera.fx - b.camera.fx).abs() < 1e-9);
            assert!((a.camera.rotation - b.camera.rotation).amax() < 1e-9);
            assert!((a.camera.translation - b.camera.translation).amax() < 1e-9);
            assert_eq!(a.camera.width, b.camera.width);
            // 16-bit quantization on the images.
            let mut max_dev = 0.0f32;
            for (pa, pb) in a.image.data().iter().zip(b.image.data()) {
                max_dev = max_dev.max((pa - pb).abs());
            }
            assert!(max_dev < 2.0 / 65535.0, "max image deviation {max_dev}");
        }
    }
}
