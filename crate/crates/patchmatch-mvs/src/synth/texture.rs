//! Plane-local textures for the synthetic renderer.
//!
//! Textures are sampled in plane coordinates, not screen space, so the same
//! surface point shades identically in every view and the rendered images
//! are exactly photo-consistent. The noise texture is band-limited value
//! noise (quintic-smoothed seeded lattice); white noise would alias under
//! homography warps and break correlation even at the true plane.

use crate::rng::lattice_hash;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Texture {
    /// Two octaves of value noise around 0.5; `cell` is the lattice spacing
    /// in plane units, `amplitude` the peak-to-peak contrast in [0, 1].
    Noise { cell: f64, amplitude: f64 },
    /// Checkerboard with the given period in plane units.
    Checker { period: f64, low: f64, high: f64 },
    /// Constant intensity.
    Flat { value: f64 },
    /// Noise everywhere except a flat axis-aligned rectangle: the classic
    /// untextured-region test card.
    UntexturedPatch {
        cell: f64,
        amplitude: f64,
        center: (f64, f64),
        half_extent: (f64, f64),
        patch_value: f64,
    },
}

impl Texture {
    pub fn sample(&self, seed: u64, u: f64, v: f64) -> f64 {
        match self {
            Texture::Flat { value } => *value,
            Texture::Checker { period, low, high } => {
                let iu = (u / period).floor() as i64;
                let iv = (v / period).floor() as i64;
                if (iu + iv).rem_euclid(2) == 0 {
                    *high
                } else {
                    *low
                }
            }
            Texture::Noise { cell, amplitude } => {
                let n = value_noise(seed, u / cell, v / cell)
                    + 0.5 * value_noise(seed ^ 0xabcd_ef12, 2.0 * u / cell, 2.0 * v / cell);
                (0.5 + amplitude * (n / 1.5 - 0.5)).clamp(0.0, 1.0)
            }
            Texture::UntexturedPatch { cell, amplitude, center, half_extent, patch_value } => {
                if (u - center.0).abs() <= half_extent.0 && (v - center.1).abs() <= half_extent.1 {
                    *patch_value
                } else {
                    Texture::Noise { cell: *cell, amplitude: *amplitude }.sample(seed, u, v)
                }
            }
        }
    }
}

/// Quintic fade, zero first and second derivatives at the lattice.
#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn value_noise(seed: u64, x: f64, y: f64) -> f64 {
    let ix = x.floor() as i64;
    let iy = y.floor() as i64;
    let fx = fade(x - ix as f64);
    let fy = fade(y - iy as f64);
    let v00 = lattice_hash(seed, ix, iy);
    let v10 = lattice_hash(seed, ix + 1, iy);
    let v01 = lattice_hash(seed, ix, iy + 1);
    let v11 = lattice_hash(seed, ix + 1, iy + 1);
    v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy
}
