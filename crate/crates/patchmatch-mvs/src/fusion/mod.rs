//! Cross-view depth-map fusion into an oriented point cloud.

mod ply;

pub use ply::{ply_file_size, write_ply};

use crate::geometry::{self, REPROJECTION_CEILING};
use crate::scene::{DepthRaster, Raster, Scene};
use nalgebra::Vector3;

/// One fused surface sample in world coordinates.
#[derive(Debug, Clone)]
pub struct FusedPoint {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub color: [u8; 3],
    /// Number of views (including the reference) that agreed.
    pub support: usize,
}

/// Consistency thresholds for fusion.
#[derive(Debug, Clone)]
pub struct FuseParams {
    /// Minimum number of agreeing views, reference included.
    pub min_consistent: usize,
    /// Forward-backward reprojection error bound in pixels.
    pub max_reproj_error: f64,
    /// Relative depth difference bound.
    pub max_rel_depth_diff: f64,
    /// Normal angle bound in degrees.
    pub max_normal_angle_deg: f64,
}

impl Default for FuseParams {
    fn default() -> Self {
        FuseParams {
            min_consistent: 2,
            max_reproj_error: 2.0,
            max_rel_depth_diff: 0.01,
            max_normal_angle_deg: 30.0,
        }
    }
}

/// Fuse per-view depth and normal maps into one point cloud.
///
/// Views are swept in order; every unconsumed valid pixel is projected into
/// all other views and checked for reprojection, depth and normal agreement.
/// When enough views agree, the agreeing 3D positions and normals are
/// averaged into one point and all contributing pixels are marked consumed,
/// so no pixel seeds two points. The sweep is serial, which keeps the result
/// independent of thread count.
pub fn fuse(
    scene: &Scene,
    depths: &[DepthRaster],
    normals: &[Raster<[f32; 3]>],
    params: &FuseParams,
) -> Vec<FusedPoint> {
    let n_views = scene.views.len();
    assert_eq!(depths.len(), n_views);
    assert_eq!(normals.len(), n_views);
    for (v, d) in scene.views.iter().zip(depths) {
        assert_eq!((d.width(), d.height()), (v.camera.width, v.camera.height));
    }

    let cos_limit = params.max_normal_angle_deg.to_radians().cos();
    let mut consumed: Vec<Raster<bool>> = scene
        .views
        .iter()
        .map(|v| Raster::new(v.camera.width, v.camera.height, false))
        .collect();
    let mut points = Vec::new();

    for ref_i in 0..n_views {
        let ref_cam = &scene.views[ref_i].camera;
        let ref_img = &scene.views[ref_i].image;
        for y in 0..ref_cam.height {
            for x in 0..ref_cam.width {
                if consumed[ref_i].get(x, y) {
                    continue;
                }
                let Some(d_ref) = depths[ref_i].depth_at(x, y) else { continue };
                let pf = (x as f64, y as f64);
                let x_world =
                    geometry::cam_to_world(ref_cam, &geometry::unproject(ref_cam, pf, d_ref as f64));
                let n_ref = normals[ref_i].get(x, y);
                let n_world = ref_cam.rotation.transpose()
                    * Vector3::new(n_ref[0] as f64, n_ref[1] as f64, n_ref[2] as f64);

                let mut positions = vec![x_world];
                let mut normal_sum = n_world;
                let mut contributors: Vec<(usize, usize, usize)> = vec![(ref_i, x, y)];

                for src_j in 0..n_views {
                    if src_j == ref_i {
                        continue;
                    }
                    let src_cam = &scene.views[src_j].camera;
                    let x_src = geometry::world_to_cam(src_cam, &x_world);
                    let Some(p_src) = geometry::project(src_cam, &x_src) else { continue };
                    let (sx, sy) = (p_src.0.round(), p_src.1.round());
                    if !depths[src_j].in_bounds(sx as i64, sy as i64) {
                        continue;
                    }
                    let (sxi, syi) = (sx as usize, sy as usize);
                    if consumed[src_j].get(sxi, syi) {
                        continue;
                    }
                    let Some(d_src) = depths[src_j].depth_at(sxi, syi) else { continue };

                    // Depth agreement between the projected depth and the
                    // source's own estimate.
                    if ((x_src.z - d_src as f64) / x_src.z).abs() >= params.max_rel_depth_diff {
                        continue;
                    }
                    // Forward-backward reprojection agreement.
                    let err = geometry::forward_backward_error(
                        ref_cam,
                        src_cam,
                        pf,
                        d_ref as f64,
                        &depths[src_j],
                    );
                    if err >= params.max_reproj_error.min(REPROJECTION_CEILING) {
                        continue;
                    }
                    // Normal agreement in world coordinates.
                    let n_src = normals[src_j].get(sxi, syi);
                    let n_src_world = src_cam.rotation.transpose()
                        * Vector3::new(n_src[0] as f64, n_src[1] as f64, n_src[2] as f64);
                    if n_world.dot(&n_src_world) < cos_limit {
                        continue;
                    }

                    let x_src_world = geometry::cam_to_world(
                        src_cam,
                        &geometry::unproject(src_cam, (sx, sy), d_src as f64),
                    );
                    positions.push(x_src_world);
                    normal_sum += n_src_world;
                    contributors.push((src_j, sxi, syi));
                }

                if contributors.len() < params.min_consistent {
                    continue;
                }
                let position = positions.iter().sum::<Vector3<f64>>() / positions.len() as f64;
                let normal = if normal_sum.norm() > 1e-12 { normal_sum.normalize() } else { n_world };
                let gray = (ref_img.get(x, y).clamp(0.0, 1.0) * 255.0).round() as u8;
                points.push(FusedPoint {
                    position,
                    normal,
                    color: [gray, gray, gray],
                    support: contributors.len(),
                });
                for (v, cx, cy) in contributors {
                    consumed[v].set(cx, cy, true);
                }
            }
        }
    }
    points
}
