//! Calibrated pinhole camera.

use crate::error::{Error, Result};
use nalgebra::{Matrix3, Vector3};

/// A pinhole camera with a world-to-camera pose.
///
/// `rotation` and `translation` map world points into the camera frame:
/// `x_cam = R * x_world + t`. Intrinsics are in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// World-to-camera rotation.
    pub rotation: Matrix3<f64>,
    /// World-to-camera translation.
    pub translation: Vector3<f64>,
    pub width: usize,
    pub height: usize,
}

impl CameraModel {
    /// Check the invariants: orthonormal right-handed rotation, positive
    /// focal lengths, principal point inside the image.
    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        let gram = r.transpose() * r - Matrix3::identity();
        if gram.amax() >= 1e-9 {
            return Err(Error::Geometry(format!(
                "rotation is not orthonormal (max deviation {:.3e})",
                gram.amax()
            )));
        }
        if (r.determinant() - 1.0).abs() >= 1e-9 {
            return Err(Error::Geometry("rotation determinant is not +1".into()));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::Geometry("focal length must be positive".into()));
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64)
            || !(0.0 <= self.cy && self.cy < self.height as f64)
        {
            return Err(Error::Geometry("principal point outside image".into()));
        }
        Ok(())
    }

    /// Camera center in world coordinates, `-Rᵀ t`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Rescale intrinsics by independent per-axis factors and set the new
    /// image size. Used when the pixel grid changes resolution.
    pub fn scaled(&self, sx: f64, sy: f64, width: usize, height: usize) -> CameraModel {
        CameraModel {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: self.cx * sx,
            cy: self.cy * sy,
            rotation: self.rotation,
            translation: self.translation,
            width,
            height,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;

    fn simple_camera() -> CameraModel {
        CameraModel {
            fx: 100.0,
            fy: 100.0,
            cx: 50.0,
            cy: 50.0,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            width: 100,
            height: 100,
        }
    }

    #[test]
    fn validate_accepts_rotations() {
        let mut cam = simple_camera();
        cam.rotation = *Rotation3::from_euler_angles(0.1, -0.2, 0.3).matrix();
        cam.validate().unwrap();
    }

    #[test]
    fn validate_rejects_reflection() {
        let mut cam = simple_camera();
        cam.rotation[(0, 0)] = -1.0;
        assert!(cam.validate().is_err());
    }

    #[test]
    fn scaled_halves_intrinsics() {
        let cam = simple_camera().scaled(0.5, 0.5, 50, 50);
        assert_eq!(cam.fx, 50.0);
        assert_eq!(cam.fy, 50.0);
        assert_eq!(cam.cx, 25.0);
        assert_eq!(cam.cy, 25.0);
    }
}
