//! Pinhole projection, plane-hypothesis algebra and plane-induced
//! homographies.
//!
//! Plane hypotheses are parameterized as a unit normal plus the depth of the
//! pixel's ray-plane intersection along the camera z axis; depth and normal
//! are perturbed independently by the optimizer, and the implied 3D plane is
//! recovered on demand.

use crate::scene::{CameraModel, DepthRaster};
use nalgebra::{Matrix3, Vector3};

/// A local surface plane seen from a reference pixel.
///
/// `normal` lives in the reference camera frame and faces the camera
/// (`normal · ray < 0`); `depth` is the z-depth of the pixel's ray-plane
/// intersection, in scene units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneHypothesis {
    pub normal: Vector3<f64>,
    pub depth: f64,
}

impl PlaneHypothesis {
    pub fn new(normal: Vector3<f64>, depth: f64) -> PlaneHypothesis {
        PlaneHypothesis { normal: normal.normalize(), depth }
    }

    /// Fronto-parallel plane at the given depth.
    pub fn fronto(depth: f64) -> PlaneHypothesis {
        PlaneHypothesis { normal: Vector3::new(0.0, 0.0, -1.0), depth }
    }

    pub fn is_valid(&self, cam: &CameraModel, p: (f64, f64), range: (f64, f64)) -> bool {
        (self.normal.norm() - 1.0).abs() < 1e-6
            && self.normal.dot(&ray_direction(cam, p)) < 0.0
            && self.depth >= range.0
            && self.depth <= range.1
    }
}

/// Unnormalized viewing ray of a pixel in the camera frame; z component is 1
/// so that the ray parameter equals z-depth.
#[inline]
pub fn ray_direction(cam: &CameraModel, p: (f64, f64)) -> Vector3<f64> {
    Vector3::new((p.0 - cam.cx) / cam.fx, (p.1 - cam.cy) / cam.fy, 1.0)
}

/// Lift a pixel to the camera frame at a given depth.
#[inline]
pub fn unproject(cam: &CameraModel, p: (f64, f64), depth: f64) -> Vector3<f64> {
    debug_assert!(depth > 0.0, "unproject needs a positive depth");
    depth * ray_direction(cam, p)
}

/// Project a camera-frame point to pixel coordinates. `None` behind the
/// camera.
#[inline]
pub fn project(cam: &CameraModel, x: &Vector3<f64>) -> Option<(f64, f64)> {
    if x.z <= 1e-12 {
        return None;
    }
    Some((cam.fx * x.x / x.z + cam.cx, cam.fy * x.y / x.z + cam.cy))
}

/// Camera-frame <-> world conversions.
#[inline]
pub fn cam_to_world(cam: &CameraModel, x_cam: &Vector3<f64>) -> Vector3<f64> {
    cam.rotation.transpose() * (x_cam - cam.translation)
}

#[inline]
pub fn world_to_cam(cam: &CameraModel, x_world: &Vector3<f64>) -> Vector3<f64> {
    cam.rotation * x_world + cam.translation
}

/// Relative pose taking reference-frame points into the source frame.
#[derive(Debug, Clone)]
pub struct RelativePose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

pub fn relative_pose(reference: &CameraModel, source: &CameraModel) -> RelativePose {
    let rotation = source.rotation * reference.rotation.transpose();
    let translation = source.translation - rotation * reference.translation;
    RelativePose { rotation, translation }
}

fn intrinsic_matrix(cam: &CameraModel) -> Matrix3<f64> {
    Matrix3::new(cam.fx, 0.0, cam.cx, 0.0, cam.fy, cam.cy, 0.0, 0.0, 1.0)
}

fn intrinsic_inverse(cam: &CameraModel) -> Matrix3<f64> {
    Matrix3::new(
        1.0 / cam.fx,
        0.0,
        -cam.cx / cam.fx,
        0.0,
        1.0 / cam.fy,
        -cam.cy / cam.fy,
        0.0,
        0.0,
        1.0,
    )
}

/// Homography induced by a plane hypothesis, with a precomputed relative
/// pose. Maps homogeneous reference pixels lying on the plane to source
/// pixels: `H = K_src (R - t nᵀ / d) K_ref⁻¹` with `d` the plane's signed
/// distance from the reference center.
pub fn homography_with(
    rel: &RelativePose,
    reference: &CameraModel,
    source: &CameraModel,
    p: (f64, f64),
    plane: &PlaneHypothesis,
) -> Option<Matrix3<f64>> {
    let point = unproject(reference, p, plane.depth);
    let dist = -plane.normal.dot(&point);
    if dist.abs() < 1e-9 {
        return None; // plane through the reference center
    }
    let mid = rel.rotation - rel.translation * (plane.normal / dist).transpose();
    Some(intrinsic_matrix(source) * mid * intrinsic_inverse(reference))
}

/// As [`homography_with`], computing the relative pose on the fly.
pub fn homography_from_plane(
    reference: &CameraModel,
    source: &CameraModel,
    p: (f64, f64),
    plane: &PlaneHypothesis,
) -> Option<Matrix3<f64>> {
    homography_with(&relative_pose(reference, source), reference, source, p, plane)
}

/// Apply a homography to a pixel. `None` when the mapped point is at or
/// behind the source camera plane.
#[inline]
pub fn warp(h: &Matrix3<f64>, p: (f64, f64)) -> Option<(f64, f64)> {
    let v = h * Vector3::new(p.0, p.1, 1.0);
    if v.z.abs() < 1e-12 || v.z < 0.0 {
        return None;
    }
    Some((v.x / v.z, v.y / v.z))
}

/// Depth at pixel `p` of the plane hypothesis anchored at pixel `q`
/// (re-anchoring a propagated hypothesis). `None` when `p`'s ray is
/// near-parallel to the plane or the intersection is behind the camera.
pub fn ray_plane_depth(
    cam: &CameraModel,
    p: (f64, f64),
    q: (f64, f64),
    plane: &PlaneHypothesis,
) -> Option<f64> {
    let anchor = unproject(cam, q, plane.depth);
    let denom = plane.normal.dot(&ray_direction(cam, p));
    if denom.abs() < 1e-12 {
        return None;
    }
    let depth = plane.normal.dot(&anchor) / denom;
    if depth > 0.0 {
        Some(depth)
    } else {
        None
    }
}

/// Ceiling returned when a forward-backward check cannot be evaluated; the
/// same value clamps the per-view geometric cost.
pub const REPROJECTION_CEILING: f64 = 2.0;

/// Forward-backward reprojection error in pixels.
///
/// Lift `p` with `d_ref`, project into the source view, read the source
/// depth there (bilinear), lift back and re-project into the reference; the
/// error is the displacement from `p`. Unverifiable geometry (projection out
/// of bounds, invalid source depth, behind a camera) scores the ceiling.
pub fn forward_backward_error(
    reference: &CameraModel,
    source: &CameraModel,
    p: (f64, f64),
    d_ref: f64,
    source_depth: &DepthRaster,
) -> f64 {
    let rel = relative_pose(reference, source);
    forward_backward_error_with(&rel, reference, source, p, d_ref, source_depth)
}

/// As [`forward_backward_error`] with a precomputed relative pose.
pub fn forward_backward_error_with(
    rel: &RelativePose,
    reference: &CameraModel,
    source: &CameraModel,
    p: (f64, f64),
    d_ref: f64,
    source_depth: &DepthRaster,
) -> f64 {
    let x_ref = unproject(reference, p, d_ref);
    let x_src = rel.rotation * x_ref + rel.translation;
    let p_src = match project(source, &x_src) {
        Some(q) => q,
        None => return REPROJECTION_CEILING,
    };
    let d_src = match source_depth.depth_bilinear(p_src.0, p_src.1) {
        Some(d) if d > 0.0 => d,
        _ => return REPROJECTION_CEILING,
    };
    let x_back = unproject(source, p_src, d_src);
    let x_ref_back = rel.rotation.transpose() * (x_back - rel.translation);
    let p_back = match project(reference, &x_ref_back) {
        Some(q) => q,
        None => return REPROJECTION_CEILING,
    };
    ((p_back.0 - p.0).powi(2) + (p_back.1 - p.1).powi(2)).sqrt()
}
