//! Photometric and geometric matching costs.
//!
//! Photometric consistency is 1 - NCC between a 36-point sparse reference
//! patch and its plane-warped source counterpart, so lower is better and the
//! range is `[0, 2]`. Per-view costs are aggregated with view weights, and a
//! decaying threshold schedule decides which views count as good matches at
//! each iteration.

use crate::error::{Error, Result};
use crate::geometry::{self, PlaneHypothesis};
use crate::scene::{CameraModel, GrayImage};
use nalgebra::Matrix3;

/// Worst cost: assigned to degenerate patches and mostly-occluded warps.
pub const WORST_COST: f64 = 2.0;

/// Patch covariance below this counts as a flat (degenerate) signal.
const MIN_VARIANCE: f64 = 1e-10;

/// Number of samples in the sparse stencil.
pub const SAMPLES: usize = 36;

/// The scale-S sampling stencil: 36 offsets on the 6x6 grid
/// `{-5s, -3s, -s, +s, +3s, +5s}^2` with `s = 2^S`, spanning a window of
/// edge `2^S * 10 + 1` pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparseWindow {
    scale: u32,
}

impl SparseWindow {
    pub fn new(scale: u32) -> SparseWindow {
        SparseWindow { scale }
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// Window edge length in pixels.
    pub fn edge(&self) -> u32 {
        (1 << self.scale) * 10 + 1
    }

    /// The 36 sampling offsets, row-major over the 6x6 grid.
    pub fn offsets(&self) -> [(i32, i32); SAMPLES] {
        let s = 1i32 << self.scale;
        let steps = [-5 * s, -3 * s, -s, s, 3 * s, 5 * s];
        let mut out = [(0, 0); SAMPLES];
        let mut k = 0;
        for &dy in &steps {
            for &dx in &steps {
                out[k] = (dx, dy);
                k += 1;
            }
        }
        out
    }
}

/// Normalized cross-correlation of two equally long sample vectors, clamped
/// to `[-1, 1]` against rounding. Errors on a flat signal.
pub fn ncc(samples_ref: &[f64], samples_src: &[f64]) -> Result<f64> {
    assert_eq!(samples_ref.len(), samples_src.len());
    let n = samples_ref.len() as f64;
    let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&a, &b) in samples_ref.iter().zip(samples_src) {
        sa += a;
        sb += b;
        sab += a * b;
        saa += a * a;
        sbb += b * b;
    }
    let cov_ab = sab / n - (sa / n) * (sb / n);
    let cov_aa = saa / n - (sa / n) * (sa / n);
    let cov_bb = sbb / n - (sb / n) * (sb / n);
    if cov_aa < MIN_VARIANCE || cov_bb < MIN_VARIANCE {
        return Err(Error::Geometry("degenerate patch: zero variance".into()));
    }
    Ok((cov_ab / (cov_aa * cov_bb).sqrt()).clamp(-1.0, 1.0))
}

/// Reference-patch samples gathered once per pixel and shared across all
/// candidate evaluations at that pixel. Sample positions are clamped to the
/// image rectangle so border pixels keep a full 36-sample patch.
#[derive(Debug, Clone)]
pub struct RefPatch {
    pub positions: [(f64, f64); SAMPLES],
    pub values: [f64; SAMPLES],
}

impl RefPatch {
    pub fn gather(img: &GrayImage, p: (i64, i64), window: &SparseWindow) -> RefPatch {
        let mut positions = [(0.0, 0.0); SAMPLES];
        let mut values = [0.0; SAMPLES];
        for (k, (dx, dy)) in window.offsets().into_iter().enumerate() {
            let x = (p.0 + dx as i64).clamp(0, img.width() as i64 - 1);
            let y = (p.1 + dy as i64).clamp(0, img.height() as i64 - 1);
            positions[k] = (x as f64, y as f64);
            values[k] = img.get(x as usize, y as usize) as f64;
        }
        RefPatch { positions, values }
    }
}

/// Photometric cost of a gathered patch against one source view under a
/// homography. Degenerate signals or more than half of the warped samples
/// falling outside the source image score [`WORST_COST`].
pub fn photometric_cost_with(patch: &RefPatch, src: &GrayImage, h: &Matrix3<f64>) -> f64 {
    let mut a = [0.0f64; SAMPLES];
    let mut b = [0.0f64; SAMPLES];
    let mut n = 0usize;
    for k in 0..SAMPLES {
        if let Some(q) = geometry::warp(h, patch.positions[k]) {
            if let Some(v) = src.bilinear(q.0, q.1) {
                a[n] = patch.values[k];
                b[n] = v;
                n += 1;
            }
        }
    }
    if n <= SAMPLES / 2 {
        return WORST_COST;
    }
    match ncc(&a[..n], &b[..n]) {
        Ok(corr) => 1.0 - corr,
        Err(_) => WORST_COST,
    }
}

/// Photometric consistency cost of a plane hypothesis at `p` against one
/// source view, in `[0, 2]`.
pub fn photometric_cost(
    ref_img: &GrayImage,
    src_img: &GrayImage,
    ref_cam: &CameraModel,
    src_cam: &CameraModel,
    p: (i64, i64),
    plane: &PlaneHypothesis,
    window: &SparseWindow,
) -> f64 {
    let patch = RefPatch::gather(ref_img, p, window);
    match geometry::homography_from_plane(ref_cam, src_cam, (p.0 as f64, p.1 as f64), plane) {
        Some(h) => photometric_cost_with(&patch, src_img, &h),
        None => WORST_COST,
    }
}

/// Weighted mean of per-view costs. `None` when every weight is zero.
pub fn aggregate(costs: &[f64], weights: &[f64]) -> Option<f64> {
    debug_assert_eq!(costs.len(), weights.len());
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 {
        return None;
    }
    let acc: f64 = costs.iter().zip(weights).map(|(c, w)| c * w).sum();
    Some(acc / wsum)
}

/// Weighted mean of clamped per-view reprojection errors. Each error is
/// clamped to 2.0 before aggregation, so the result never exceeds 2.0.
pub fn geometric_cost(errors: &[f64], weights: &[f64]) -> Option<f64> {
    debug_assert_eq!(errors.len(), weights.len());
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 {
        return None;
    }
    let acc: f64 = errors
        .iter()
        .zip(weights)
        .map(|(e, w)| e.min(geometry::REPROJECTION_CEILING) * w)
        .sum();
    Some(acc / wsum)
}

/// Good-match cost threshold decay, reset at each scale.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdSchedule {
    pub tau0: f64,
    pub alpha: f64,
}

impl ThresholdSchedule {
    pub fn new(tau0: f64, alpha: f64) -> ThresholdSchedule {
        assert!(tau0 > 0.0 && alpha > 0.0);
        ThresholdSchedule { tau0, alpha }
    }

    /// `tau0 * exp(-t^2 / alpha)` for the t-th iteration within a scale.
    pub fn value(&self, t: u32) -> f64 {
        self.tau0 * (-((t * t) as f64) / self.alpha).exp()
    }
}

impl Default for ThresholdSchedule {
    fn default() -> Self {
        ThresholdSchedule { tau0: 0.8, alpha: 90.0 }
    }
}

/// Weight a view 1.0 when its cost beats the threshold, 0.1 otherwise; when
/// no view qualifies, fall back to uniform weights so the pixel stays alive.
pub fn update_view_weights(per_view_costs: &[f64], tau: f64, weights: &mut [f64]) {
    debug_assert_eq!(per_view_costs.len(), weights.len());
    let mut any = false;
    for (w, &c) in weights.iter_mut().zip(per_view_costs) {
        if c < tau {
            *w = 1.0;
            any = true;
        } else {
            *w = 0.1;
        }
    }
    if !any {
        weights.fill(1.0);
    }
}
