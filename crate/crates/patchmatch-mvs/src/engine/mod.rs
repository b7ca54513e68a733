//! The per-view PatchMatch optimizer.
//!
//! One full iteration updates the two checkerboard colors in turn; a pixel
//! of one color reads candidate hypotheses only from the other color (the
//! stencil guarantees the parity), so all updates within a color pass are
//! independent and run data-parallel. Per-pixel random streams are keyed by
//! `(seed, pass, pixel)`, which makes results independent of the worker
//! count.
//!
//! A pass scores each pixel as follows: pick the stored-cost winner of each
//! of the eight stencil regions, re-anchor its plane at the pixel, evaluate
//! those candidates plus the incumbent under the pass objective, adopt the
//! argmin (ties keep the incumbent), refresh the view weights against the
//! iteration threshold, then try a random redraw and a shrinking
//! perturbation of the winner.

mod eval;
mod map;
mod stencil;

pub use eval::{Evaluation, Evaluator, PassMode, SourceView};
pub use map::{HypothesisMap, ViewWeights};
pub use stencil::PropagationStencil;

use crate::cost::{self, RefPatch, SparseWindow, ThresholdSchedule};
use crate::geometry::{self, PlaneHypothesis};
use crate::rng::PixelRng;
use crate::scene::{CameraModel, DepthRaster, Raster, View};
use nalgebra::Vector3;
use rayon::prelude::*;

/// Multi-scale iteration plan: `iterations_per_scale` propagation iterations
/// at each window scale, from `s_max` down to 0.
#[derive(Debug, Clone, Copy)]
pub struct ScaleSchedule {
    pub s_max: u32,
    pub iterations_per_scale: u32,
}

impl ScaleSchedule {
    pub fn new(s_max: u32) -> ScaleSchedule {
        ScaleSchedule { s_max, iterations_per_scale: 3 }
    }

    /// Scales in execution order, coarse to fine.
    pub fn scales(&self) -> impl Iterator<Item = u32> {
        (0..=self.s_max).rev()
    }

    pub fn total_iterations(&self) -> u32 {
        self.iterations_per_scale * (self.s_max + 1)
    }

    /// Window edge per iteration, in execution order.
    pub fn window_edges(&self) -> Vec<u32> {
        self.scales()
            .flat_map(|s| {
                std::iter::repeat_n(SparseWindow::new(s).edge(), self.iterations_per_scale as usize)
            })
            .collect()
    }
}

/// Pick the maximum window scale from the image resolution.
pub fn select_smax(max_dim: usize) -> u32 {
    if max_dim >= 2400 {
        2
    } else if max_dim >= 1200 {
        1
    } else {
        0
    }
}

/// Uniform camera-facing unit normal for the given (unnormalized) pixel ray.
fn hemisphere_normal(rng: &mut PixelRng, ray: &Vector3<f64>) -> Vector3<f64> {
    for _ in 0..8 {
        let z = 1.0 - 2.0 * rng.next_f64();
        let phi = 2.0 * std::f64::consts::PI * rng.next_f64();
        let r = (1.0 - z * z).max(0.0).sqrt();
        let mut n = Vector3::new(r * phi.cos(), r * phi.sin(), z);
        let d = n.dot(ray);
        if d > 0.0 {
            n = -n;
        }
        // Reject near-tangent directions; they make the plane almost
        // parallel to the ray and the re-anchored depth explodes.
        if n.dot(ray) / ray.norm() < -1e-3 {
            return n;
        }
    }
    -ray.normalize()
}

fn random_plane(rng: &mut PixelRng, ray: &Vector3<f64>, range: (f64, f64)) -> PlaneHypothesis {
    let depth = rng.uniform(range.0, range.1);
    let normal = hemisphere_normal(rng, ray);
    PlaneHypothesis { normal, depth }
}

/// Shrinking perturbation of the incumbent: depth scaled by
/// `U[1 - 0.5/2^t, 1 + 0.5/2^t]`, normal rotated inside a `30°/2^t` cone.
/// `None` when the rotated normal no longer faces the camera.
fn perturb_plane(
    rng: &mut PixelRng,
    plane: &PlaneHypothesis,
    t: u32,
    range: (f64, f64),
    ray: &Vector3<f64>,
) -> Option<PlaneHypothesis> {
    let shrink = 0.5f64.powi(t as i32);
    let factor = rng.uniform(1.0 - 0.5 * shrink, 1.0 + 0.5 * shrink);
    let cone = 30f64.to_radians() * shrink;
    let cos_theta = rng.uniform(cone.cos(), 1.0);
    let phi = 2.0 * std::f64::consts::PI * rng.next_f64();

    let depth = (plane.depth * factor).clamp(range.0, range.1);
    let n = plane.normal;
    // Orthonormal frame around the current normal.
    let helper = if n.x.abs() < 0.8 { Vector3::x() } else { Vector3::y() };
    let e1 = n.cross(&helper).normalize();
    let e2 = n.cross(&e1);
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let normal = (cos_theta * n + sin_theta * (phi.cos() * e1 + phi.sin() * e2)).normalize();
    if normal.dot(ray) >= 0.0 {
        return None;
    }
    Some(PlaneHypothesis { normal, depth })
}

/// Random plane hypotheses for every pixel, with costs evaluated under the
/// evaluator's window and uniform view weights. Deterministic given the
/// seed.
pub fn random_init(ev: &Evaluator, range: (f64, f64), seed: u64) -> HypothesisMap {
    let (w, h) = (ev.ref_img.width(), ev.ref_img.height());
    let mut map = HypothesisMap::new_uninit(w, h, ev.n_sources(), seed);
    let pass_id = map.bump_pass();
    let weights = ev.uniform_weights();
    let states: Vec<(PlaneHypothesis, f64, f64, f64)> = (0..w * h)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (idx % w, idx / w);
            let mut rng = PixelRng::new(seed, pass_id, idx as u64);
            let ray = geometry::ray_direction(ev.ref_cam, (x as f64, y as f64));
            let plane = random_plane(&mut rng, &ray, range);
            let patch = RefPatch::gather(ev.ref_img, (x as i64, y as i64), &ev.window);
            let e = ev.evaluate((x, y), &patch, &plane, &weights);
            (plane, e.objective, e.m_p, e.m_g)
        })
        .collect();
    for (idx, (plane, c, mp, mg)) in states.into_iter().enumerate() {
        map.store(idx, plane, c, mp, mg);
    }
    map
}

/// Re-evaluate every stored hypothesis under the evaluator's current window
/// and mode, refreshing the stored objective (planes and weights are left
/// untouched). Called when a pass changes scale or objective so that stored
/// costs stay comparable.
pub fn prime(map: &mut HypothesisMap, ev: &Evaluator) {
    let w = map.width();
    let n = w * map.height();
    let vals: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (idx % w, idx / w);
            let patch = RefPatch::gather(ev.ref_img, (x as i64, y as i64), &ev.window);
            let e = ev.evaluate((x, y), &patch, map.plane(idx), map.weights_at(idx));
            (e.objective, e.m_p, e.m_g)
        })
        .collect();
    for (idx, (c, mp, mg)) in vals.into_iter().enumerate() {
        let plane = *map.plane(idx);
        map.store(idx, plane, c, mp, mg);
    }
}

struct PixelUpdate {
    idx: usize,
    plane: PlaneHypothesis,
    cost: f64,
    photo: f64,
    geom: f64,
    weights: ViewWeights,
}

/// One checkerboard color pass; only pixels with `(x + y) % 2 == color`
/// change.
pub fn checkerboard_pass(
    map: &mut HypothesisMap,
    ev: &Evaluator,
    stencil: &PropagationStencil,
    color: u8,
    tau: f64,
    refine_t: u32,
    range: (f64, f64),
) {
    checkerboard_pass_impl(map, ev, stencil, color, tau, refine_t, range, true);
}

/// [`checkerboard_pass`] with the refinement step disabled: propagation
/// only. Exists for ablation.
pub fn checkerboard_pass_no_refine(
    map: &mut HypothesisMap,
    ev: &Evaluator,
    stencil: &PropagationStencil,
    color: u8,
    tau: f64,
    range: (f64, f64),
) {
    checkerboard_pass_impl(map, ev, stencil, color, tau, 0, range, false);
}

#[allow(clippy::too_many_arguments)]
fn checkerboard_pass_impl(
    map: &mut HypothesisMap,
    ev: &Evaluator,
    stencil: &PropagationStencil,
    color: u8,
    tau: f64,
    refine_t: u32,
    range: (f64, f64),
    refine: bool,
) {
    let pass_id = map.bump_pass();
    let seed = map.seed();
    let indices = map.color_indices(color);
    let frozen: &HypothesisMap = map;
    let updates: Vec<PixelUpdate> = indices
        .par_iter()
        .map(|&idx| update_pixel(frozen, ev, stencil, idx, tau, refine_t, range, seed, pass_id, refine))
        .collect();
    for u in updates {
        map.store(u.idx, u.plane, u.cost, u.photo, u.geom);
        map.store_weights(u.idx, &u.weights);
    }
}

#[allow(clippy::too_many_arguments)]
fn update_pixel(
    map: &HypothesisMap,
    ev: &Evaluator,
    stencil: &PropagationStencil,
    idx: usize,
    tau: f64,
    refine_t: u32,
    range: (f64, f64),
    seed: u64,
    pass_id: u64,
    refine: bool,
) -> PixelUpdate {
    let w = map.width();
    let h = map.height();
    let (x, y) = (idx % w, idx / w);
    let pf = (x as f64, y as f64);
    let patch = RefPatch::gather(ev.ref_img, (x as i64, y as i64), &ev.window);
    let weights: ViewWeights = map.weights_at(idx).into();
    let ray = geometry::ray_direction(ev.ref_cam, pf);

    let mut best_plane = *map.plane(idx);
    let mut best = ev.evaluate((x, y), &patch, &best_plane, &weights);

    for region in stencil.regions() {
        // Winner of this region by stored cost.
        let mut best_q = usize::MAX;
        let mut best_stored = f64::INFINITY;
        for &(dx, dy) in region {
            let qx = x as i64 + dx as i64;
            let qy = y as i64 + dy as i64;
            if qx >= 0 && qy >= 0 && qx < w as i64 && qy < h as i64 {
                debug_assert_ne!((qx + qy) & 1, (x + y) as i64 & 1, "same-color read");
                let qidx = qy as usize * w + qx as usize;
                let c = map.cost(qidx);
                if c < best_stored {
                    best_stored = c;
                    best_q = qidx;
                }
            }
        }
        if best_q == usize::MAX {
            continue;
        }
        // Re-anchor the winning plane at this pixel.
        let qplane = *map.plane(best_q);
        let q = ((best_q % w) as f64, (best_q / w) as f64);
        let Some(depth) = geometry::ray_plane_depth(ev.ref_cam, pf, q, &qplane) else {
            continue;
        };
        if !(range.0..=range.1).contains(&depth) {
            continue;
        }
        let cand = PlaneHypothesis { normal: qplane.normal, depth };
        if cand.normal.dot(&ray) >= 0.0 {
            continue;
        }
        let e = ev.evaluate((x, y), &patch, &cand, &weights);
        if e.objective < best.objective {
            best = e;
            best_plane = cand;
        }
    }

    // Weight refresh against the iteration threshold, then re-aggregate the
    // winner under the new weights so stored state stays self-consistent.
    let mut new_weights = weights;
    cost::update_view_weights(&best.per_view_photo, tau, &mut new_weights);
    let mut best = ev.reweigh((x, y), &best_plane, best, &new_weights);

    // Refinement: full redraw, then a shrinking perturbation. Both draws
    // happen unconditionally to keep the stream layout fixed.
    if refine {
        let mut rng = PixelRng::new(seed, pass_id, idx as u64);
        let redraw = random_plane(&mut rng, &ray, range);
        let perturbed = perturb_plane(&mut rng, &best_plane, refine_t, range, &ray);
        for cand in std::iter::once(Some(redraw)).chain(std::iter::once(perturbed)).flatten() {
            let e = ev.evaluate((x, y), &patch, &cand, &new_weights);
            if e.objective < best.objective {
                best = e;
                best_plane = cand;
            }
        }
    }

    PixelUpdate {
        idx,
        plane: best_plane,
        cost: best.objective,
        photo: best.m_p,
        geom: best.m_g,
        weights: new_weights,
    }
}

/// Overwrite one pixel's hypothesis and re-evaluate its stored costs under
/// the given evaluator (used to seed or corrupt a map in tests and
/// diagnostics).
pub fn plant_hypothesis(map: &mut HypothesisMap, ev: &Evaluator, x: usize, y: usize, plane: PlaneHypothesis) {
    let idx = map.index(x, y);
    let patch = RefPatch::gather(ev.ref_img, (x as i64, y as i64), &ev.window);
    let e = ev.evaluate((x, y), &patch, &plane, map.weights_at(idx));
    map.store(idx, plane, e.objective, e.m_p, e.m_g);
}

fn source_views<'a>(reference: &'a View, sources: &'a [&'a View]) -> Vec<SourceView<'a>> {
    sources.iter().map(|v| SourceView::new(&reference.camera, &v.camera, &v.image)).collect()
}

/// Multi-scale PatchMatch: random init at the coarsest window, then three
/// propagation iterations per scale with the threshold reset at each scale.
pub fn run_mpm(
    reference: &View,
    sources: &[&View],
    schedule: &ScaleSchedule,
    tau: &ThresholdSchedule,
    range: (f64, f64),
    seed: u64,
) -> HypothesisMap {
    let stencil = PropagationStencil::new();
    let mut map: Option<HypothesisMap> = None;
    for s in schedule.scales() {
        let ev = Evaluator::new(
            &reference.camera,
            &reference.image,
            source_views(reference, sources),
            SparseWindow::new(s),
            PassMode::Photometric,
        );
        let mut m = match map.take() {
            None => random_init(&ev, range, seed),
            Some(mut m) => {
                prime(&mut m, &ev);
                m
            }
        };
        for t in 0..schedule.iterations_per_scale {
            let tv = tau.value(t);
            for color in [0u8, 1u8] {
                checkerboard_pass(&mut m, &ev, &stencil, color, tv, t, range);
            }
        }
        map = Some(m);
    }
    map.expect("schedule has at least one scale")
}

/// Checkerboard iterations at scale 0 with the combined photometric +
/// geometric objective `m_p + eta * m_g`, scored against the current depth
/// maps of the source views (`source_depths` parallel to `sources`).
#[allow(clippy::too_many_arguments)]
pub fn run_geometric_pass(
    map: &mut HypothesisMap,
    reference: &View,
    sources: &[&View],
    source_depths: &[&DepthRaster],
    eta: f64,
    iterations: u32,
    tau_hold: f64,
    range: (f64, f64),
) {
    let ev = Evaluator::new(
        &reference.camera,
        &reference.image,
        source_views(reference, sources),
        SparseWindow::new(0),
        PassMode::Geometric { eta, source_depths },
    );
    let stencil = PropagationStencil::new();
    prime(map, &ev);
    for t in 0..iterations {
        for color in [0u8, 1u8] {
            checkerboard_pass(map, &ev, &stencil, color, tau_hold, t, range);
        }
    }
}

/// Aggregated forward-backward consistency of the map's current depths
/// against the source views' depth maps, weighted by the stored view
/// weights. Used to gate planar-prior anchors.
pub fn geometric_consistency_raster(
    map: &HypothesisMap,
    ref_cam: &CameraModel,
    src_cams: &[&CameraModel],
    src_depths: &[&DepthRaster],
) -> Raster<f32> {
    assert_eq!(src_cams.len(), src_depths.len());
    let rels: Vec<geometry::RelativePose> =
        src_cams.iter().map(|c| geometry::relative_pose(ref_cam, c)).collect();
    let w = map.width();
    let n = w * map.height();
    let values: Vec<f32> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (idx % w, idx / w);
            let pf = (x as f64, y as f64);
            let depth = map.plane(idx).depth;
            let errs: ViewWeights = rels
                .iter()
                .zip(src_cams)
                .zip(src_depths)
                .map(|((rel, cam), dr)| {
                    geometry::forward_backward_error_with(rel, ref_cam, cam, pf, depth, dr)
                })
                .collect();
            cost::geometric_cost(&errs, map.weights_at(idx)).unwrap_or(geometry::REPROJECTION_CEILING) as f32
        })
        .collect();
    Raster::from_vec(w, map.height(), values)
}
