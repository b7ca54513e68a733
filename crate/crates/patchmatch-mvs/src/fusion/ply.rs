//! Binary little-endian PLY export.

use super::FusedPoint;
use crate::error::Result;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Write an oriented, colored point cloud. Layout per vertex: x, y, z, nx,
/// ny, nz as f32 and red, green, blue as u8 — 27 bytes.
pub fn write_ply(points: &[FusedPoint], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(
        out,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property float nx\nproperty float ny\nproperty float nz\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         end_header\n",
        points.len()
    )?;
    for p in points {
        for v in [p.position.x, p.position.y, p.position.z, p.normal.x, p.normal.y, p.normal.z] {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
        out.write_all(&p.color)?;
    }
    out.flush()?;
    Ok(())
}

/// Exact byte length [`write_ply`] will produce for `n` points.
pub fn ply_file_size(n: usize) -> usize {
    ply_header(n).len() + n * 27
}

fn ply_header(n: usize) -> String {
    format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {n}\n\
         property float x\nproperty float y\nproperty float z\n\
         property float nx\nproperty float ny\nproperty float nz\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         end_header\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use tempfile::tempdir;

    /// Minimal independent PLY reader used as the round-trip oracle.
    fn read_ply_oracle(path: &Path) -> Vec<([f32; 6], [u8; 3])> {
        let bytes = std::fs::read(path).unwrap();
        let header_end = bytes
            .windows(11)
            .position(|w| w == b"end_header\n")
            .expect("no end_header")
            + 11;
        let header = std::str::from_utf8(&bytes[..header_end]).unwrap();
        assert!(header.starts_with("ply\nformat binary_little_endian 1.0\n"));
        let count: usize = header
            .lines()
            .find(|l| l.starts_with("element vertex "))
            .and_then(|l| l.rsplit(' ').next())
            .and_then(|n| n.parse().ok())
            .unwrap();
        let mut out = Vec::with_capacity(count);
        let mut off = header_end;
        for _ in 0..count {
            let mut floats = [0.0f32; 6];
            for f in &mut floats {
                *f = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
                off += 4;
            }
            let rgb = [bytes[off], bytes[off + 1], bytes[off + 2]];
            off += 3;
            out.push((floats, rgb));
        }
        assert_eq!(off, bytes.len());
        out
    }

    fn point(x: f64, y: f64, z: f64) -> FusedPoint {
        FusedPoint {
            position: Vector3::new(x, y, z),
            normal: Vector3::new(0.0, 0.0, -1.0),
            color: [10, 200, 31],
            support: 2,
        }
    }

    #[test]
    fn empty_cloud_has_valid_header() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.ply");
        write_ply(&[], &path).unwrap();
        let pts = read_ply_oracle(&path);
        assert!(pts.is_empty());
        assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, ply_file_size(0));
    }

    #[test]
    fn one_point_round_trips_bit_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("one.ply");
        let p = point(1.5, -2.25, 1.0e-3);
        write_ply(std::slice::from_ref(&p), &path).unwrap();
        let pts = read_ply_oracle(&path);
        assert_eq!(pts.len(), 1);
        let (f, rgb) = &pts[0];
        assert_eq!(f[0].to_bits(), (1.5f32).to_bits());
        assert_eq!(f[1].to_bits(), (-2.25f32).to_bits());
        assert_eq!(f[2].to_bits(), (1.0e-3f32).to_bits());
        assert_eq!(f[5].to_bits(), (-1.0f32).to_bits());
        assert_eq!(*rgb, [10, 200, 31]);
    }

    #[test]
    fn file_size_formula() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("n.ply");
        let pts: Vec<FusedPoint> = (0..57).map(|i| point(i as f64, 0.0, 1.0)).collect();
        write_ply(&pts, &path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, ply_file_size(57));
    }
}
