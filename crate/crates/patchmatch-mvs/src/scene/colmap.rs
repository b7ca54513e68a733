//! COLMAP-compatible `cameras.txt` / `images.txt` parsing and writing.
//!
//! Only the PINHOLE camera model is supported. `images.txt` carries the
//! world-to-camera pose as a `qw qx qy qz tx ty tz` row; the second line of
//! each image entry (2D point observations) is ignored on read and written
//! empty.

use super::camera::CameraModel;
use crate::error::{Error, Result};
use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct CameraEntry {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

#[derive(Debug, Clone)]
pub struct ImageEntry {
    pub image_id: u64,
    pub camera_id: u64,
    pub name: String,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn parse_f64(tok: &str, file: &str) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::Scene(format!("{file}: bad number `{tok}`")))
}

pub fn parse_cameras(text: &str) -> Result<BTreeMap<u64, CameraEntry>> {
    let mut cameras = BTreeMap::new();
    for line in data_lines(text) {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() < 4 {
            return Err(Error::Scene(format!("cameras.txt: short line `{line}`")));
        }
        let id: u64 = tok[0].parse().map_err(|_| Error::Scene("cameras.txt: bad camera id".into()))?;
        if tok[1] != "PINHOLE" {
            return Err(Error::UnsupportedCameraModel(tok[1].to_string()));
        }
        if tok.len() != 8 {
            return Err(Error::Scene(format!(
                "cameras.txt: PINHOLE expects 4 params, line `{line}`"
            )));
        }
        let entry = CameraEntry {
            width: tok[2].parse().map_err(|_| Error::Scene("cameras.txt: bad width".into()))?,
            height: tok[3].parse().map_err(|_| Error::Scene("cameras.txt: bad height".into()))?,
            fx: parse_f64(tok[4], "cameras.txt")?,
            fy: parse_f64(tok[5], "cameras.txt")?,
            cx: parse_f64(tok[6], "cameras.txt")?,
            cy: parse_f64(tok[7], "cameras.txt")?,
        };
        cameras.insert(id, entry);
    }
    Ok(cameras)
}

pub fn parse_images(text: &str) -> Result<Vec<ImageEntry>> {
    let mut entries = Vec::new();
    for line in data_lines(text) {
        let tok: Vec<&str> = line.split_whitespace().collect();
        // Each image has a pose row followed by a 2D-observation row. The
        // observation row is either blank (dropped by the filter) or entirely
        // numeric (x y point3d_id triples); a pose row always ends in a file
        // name, so an all-numeric row is skipped.
        if tok.iter().all(|t| t.parse::<f64>().is_ok()) {
            continue;
        }
        if tok.len() < 10 {
            return Err(Error::Scene(format!("images.txt: short pose line `{line}`")));
        }
        let image_id: u64 = tok[0].parse().map_err(|_| Error::Scene("images.txt: bad image id".into()))?;
        let qw = parse_f64(tok[1], "images.txt")?;
        let qx = parse_f64(tok[2], "images.txt")?;
        let qy = parse_f64(tok[3], "images.txt")?;
        let qz = parse_f64(tok[4], "images.txt")?;
        let tx = parse_f64(tok[5], "images.txt")?;
        let ty = parse_f64(tok[6], "images.txt")?;
        let tz = parse_f64(tok[7], "images.txt")?;
        let camera_id: u64 = tok[8].parse().map_err(|_| Error::Scene("images.txt: bad camera id".into()))?;
        let name = tok[9..].join(" ");
        let q = UnitQuaternion::from_quaternion(Quaternion::new(qw, qx, qy, qz));
        entries.push(ImageEntry {
            image_id,
            camera_id,
            name,
            rotation: *q.to_rotation_matrix().matrix(),
            translation: Vector3::new(tx, ty, tz),
        });
    }
    Ok(entries)
}

/// Compose per-view cameras from the two parsed files.
pub fn assemble_cameras(
    cameras: &BTreeMap<u64, CameraEntry>,
    images: &[ImageEntry],
) -> Result<Vec<(String, CameraModel)>> {
    let mut sorted: Vec<&ImageEntry> = images.iter().collect();
    sorted.sort_by_key(|e| e.image_id);
    let mut out = Vec::with_capacity(sorted.len());
    for entry in sorted {
        let cam = cameras.get(&entry.camera_id).ok_or_else(|| {
            Error::Scene(format!(
                "images.txt references camera {} not present in cameras.txt",
                entry.camera_id
            ))
        })?;
        let model = CameraModel {
            fx: cam.fx,
            fy: cam.fy,
            cx: cam.cx,
            cy: cam.cy,
            rotation: entry.rotation,
            translation: entry.translation,
            width: cam.width,
            height: cam.height,
        };
        model.validate()?;
        out.push((entry.name.clone(), model));
    }
    Ok(out)
}

/// Write `cameras.txt` + `images.txt` for a list of named views. One camera
/// entry per view; floats use Rust's shortest round-trip formatting.
pub fn write_scene_text(dir: &Path, views: &[(String, CameraModel)]) -> Result<()> {
    let mut cameras = String::from("# CAMERA_ID MODEL WIDTH HEIGHT PARAMS[fx fy cx cy]\n");
    let mut images = String::from("# IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME\n");
    for (i, (name, cam)) in views.iter().enumerate() {
        let id = i + 1;
        writeln!(
            cameras,
            "{id} PINHOLE {} {} {} {} {} {}",
            cam.width, cam.height, cam.fx, cam.fy, cam.cx, cam.cy
        )
        .unwrap();
        let rot = Rotation3::from_matrix_unchecked(cam.rotation);
        let mut q = UnitQuaternion::from_rotation_matrix(&rot);
        if q.w < 0.0 {
            q = UnitQuaternion::from_quaternion(Quaternion::new(-q.w, -q.i, -q.j, -q.k));
        }
        writeln!(
            images,
            "{id} {} {} {} {} {} {} {} {id} {name}",
            q.w, q.i, q.j, q.k, cam.translation.x, cam.translation.y, cam.translation.z
        )
        .unwrap();
        images.push('\n'); // empty observations row
    }
    std::fs::write(dir.join("cameras.txt"), cameras)?;
    std::fs::write(dir.join("images.txt"), images)?;
    Ok(())
}
