//! Geometric-consistency-filtered planar prior.
//!
//! Reliable pixels (low photometric cost *and* low cross-view geometric
//! cost) are picked per grid cell, Delaunay triangulated, and each
//! triangle's three lifted vertices define a 3D plane. The plane supplies a
//! prior depth for every covered pixel, which turns into a bounded penalty
//! on hypotheses that stray from it — strong enough to pull untextured
//! regions onto the prior, bounded so genuinely non-planar geometry can
//! still win on photometric evidence.

mod delaunay;

pub use delaunay::{circumcircle, delaunay};

use crate::cost::SparseWindow;
use crate::engine::{checkerboard_pass, prime, Evaluator, HypothesisMap, PassMode, PropagationStencil, SourceView};
use crate::error::Result;
use crate::geometry::{self, PlaneHypothesis};
use crate::scene::{CameraModel, Raster, View};
use nalgebra::Vector3;
use std::fmt::Write as _;
use std::path::Path;

/// Photometric gate for anchor selection.
pub const ANCHOR_MAX_PHOTO: f64 = 0.2;
/// Geometric gate for anchor selection.
pub const ANCHOR_MAX_GEOM: f64 = 1.0;
/// Triangles flatter than this (in pixel area) are dropped.
const MIN_TRIANGLE_AREA: f64 = 0.5;

/// Which gate anchors must pass. The geometric gate is the full rule; the
/// photometric-only variant exists for ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorGate {
    Geometric,
    Photometric,
}

/// A triangulation vertex: a reliable pixel with its depth and the costs it
/// was selected at.
#[derive(Debug, Clone)]
pub struct AnchorVertex {
    pub pixel: (usize, usize),
    pub depth: f64,
    pub m_p: f64,
    pub m_g: f64,
}

/// Pick at most one anchor per `cell x cell` region: the minimum-`m_p` pixel
/// among those passing the gate (`m_p < 0.2`, and `m_g < 1.0` when the
/// geometric gate is on). Cells with no qualifying pixel contribute nothing.
pub fn select_anchors(
    map: &HypothesisMap,
    m_g: &Raster<f32>,
    cell: usize,
    gate: AnchorGate,
) -> Vec<AnchorVertex> {
    assert!(cell >= 2);
    let (w, h) = (map.width(), map.height());
    let mut anchors = Vec::new();
    let mut cy = 0;
    while cy < h {
        let mut cx = 0;
        while cx < w {
            let mut best: Option<AnchorVertex> = None;
            for y in cy..(cy + cell).min(h) {
                for x in cx..(cx + cell).min(w) {
                    let idx = map.index(x, y);
                    let m_p = map.photo(idx);
                    let g = m_g.get(x, y) as f64;
                    if m_p >= ANCHOR_MAX_PHOTO {
                        continue;
                    }
                    if gate == AnchorGate::Geometric && g >= ANCHOR_MAX_GEOM {
                        continue;
                    }
                    if best.as_ref().is_none_or(|b| m_p < b.m_p) {
                        best = Some(AnchorVertex {
                            pixel: (x, y),
                            depth: map.plane(idx).depth,
                            m_p,
                            m_g: g,
                        });
                    }
                }
            }
            anchors.extend(best);
            cx += cell;
        }
        cy += cell;
    }
    anchors
}

/// Bounded prior penalty added to the aggregated photometric cost:
/// `m_p + lambda * (1 - exp(-r^2 / (2 sigma^2)))` with
/// `r = (d - d_prior) / d_prior`; `m_p` passes through unchanged where the
/// prior has no coverage.
pub fn prior_assisted_cost(m_p: f64, depth: f64, d_prior: Option<f64>, lambda: f64, sigma: f64) -> f64 {
    match d_prior {
        None => m_p,
        Some(dp) => {
            let r = (depth - dp) / dp;
            m_p + lambda * (1.0 - (-r * r / (2.0 * sigma * sigma)).exp())
        }
    }
}

/// Triangulated prior: anchor vertices, Delaunay triangles, one 3D plane per
/// triangle (through the three lifted vertices) and a per-pixel triangle
/// index for point location.
pub struct PriorModel {
    vertices: Vec<AnchorVertex>,
    triangles: Vec<[usize; 3]>,
    /// `(unit normal, point on plane)` per triangle, camera frame, facing.
    planes: Vec<(Vector3<f64>, Vector3<f64>)>,
    tri_index: Raster<i32>,
}

impl PriorModel {
    /// Build the model for one reference view. Fewer than three usable
    /// anchors (or an all-collinear set) yields an empty model, which
    /// disables the prior.
    pub fn build(cam: &CameraModel, vertices: Vec<AnchorVertex>) -> PriorModel {
        let pts: Vec<(f64, f64)> =
            vertices.iter().map(|v| (v.pixel.0 as f64, v.pixel.1 as f64)).collect();
        let mut triangles = Vec::new();
        let mut planes = Vec::new();
        for t in delaunay(&pts) {
            let a = pts[t[0]];
            let b = pts[t[1]];
            let c = pts[t[2]];
            let area = 0.5 * ((b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)).abs();
            if area <= MIN_TRIANGLE_AREA {
                continue;
            }
            let xa = geometry::unproject(cam, a, vertices[t[0]].depth);
            let xb = geometry::unproject(cam, b, vertices[t[1]].depth);
            let xc = geometry::unproject(cam, c, vertices[t[2]].depth);
            let mut normal = (xb - xa).cross(&(xc - xa));
            if normal.norm() < 1e-12 {
                continue;
            }
            normal.normalize_mut();
            // Face the camera: the plane's signed distance along the anchor
            // ray must be negative.
            let facing = normal.dot(&xa);
            if facing.abs() < 1e-12 {
                continue;
            }
            if facing > 0.0 {
                normal = -normal;
            }
            triangles.push(t);
            planes.push((normal, xa));
        }
        let tri_index = rasterize_triangles(cam.width, cam.height, &pts, &triangles);
        PriorModel { vertices, triangles, planes, tri_index }
    }

    pub fn empty(width: usize, height: usize) -> PriorModel {
        PriorModel {
            vertices: Vec::new(),
            triangles: Vec::new(),
            planes: Vec::new(),
            tri_index: Raster::new(width, height, -1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn vertices(&self) -> &[AnchorVertex] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Prior depth at a pixel: intersect the pixel's ray with the plane of
    /// the triangle covering it. `None` outside coverage or when the ray is
    /// near-parallel to the plane.
    pub fn prior_depth(&self, cam: &CameraModel, p: (usize, usize)) -> Option<f64> {
        let ti = self.tri_index.get(p.0, p.1);
        if ti < 0 {
            return None;
        }
        let (normal, point) = self.planes[ti as usize];
        let ray = geometry::ray_direction(cam, (p.0 as f64, p.1 as f64));
        let denom = normal.dot(&ray);
        if denom.abs() < 1e-12 {
            return None;
        }
        let depth = normal.dot(&point) / denom;
        if depth > 0.0 {
            Some(depth)
        } else {
            None
        }
    }

    /// Prior depth for every pixel; NaN where the prior has no coverage.
    pub fn depth_raster(&self, cam: &CameraModel) -> Raster<f32> {
        let mut out = Raster::new(self.tri_index.width(), self.tri_index.height(), f32::NAN);
        for y in 0..out.height() {
            for x in 0..out.width() {
                if let Some(d) = self.prior_depth(cam, (x, y)) {
                    out.set(x, y, d as f32);
                }
            }
        }
        out
    }

    /// Text dump of the triangulation (vertex list then index triples) for
    /// visual inspection.
    pub fn write_debug(&self, path: &Path) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "# vertices {}", self.vertices.len()).unwrap();
        for v in &self.vertices {
            writeln!(s, "v {} {} {} {} {}", v.pixel.0, v.pixel.1, v.depth, v.m_p, v.m_g).unwrap();
        }
        writeln!(s, "# triangles {}", self.triangles.len()).unwrap();
        for t in &self.triangles {
            writeln!(s, "t {} {} {}", t[0], t[1], t[2]).unwrap();
        }
        std::fs::write(path, s)?;
        Ok(())
    }
}

fn rasterize_triangles(
    width: usize,
    height: usize,
    pts: &[(f64, f64)],
    triangles: &[[usize; 3]],
) -> Raster<i32> {
    let mut index = Raster::new(width, height, -1i32);
    for (ti, t) in triangles.iter().enumerate() {
        let a = pts[t[0]];
        let b = pts[t[1]];
        let c = pts[t[2]];
        let min_x = a.0.min(b.0).min(c.0).floor().max(0.0) as usize;
        let max_x = (a.0.max(b.0).max(c.0).ceil() as usize).min(width - 1);
        let min_y = a.1.min(b.1).min(c.1).floor().max(0.0) as usize;
        let max_y = (a.1.max(b.1).max(c.1).ceil() as usize).min(height - 1);
        for y in min_y..=max_y {
            for x in min_x..=max_x {
                if index.get(x, y) >= 0 {
                    continue;
                }
                if point_in_triangle((x as f64, y as f64), a, b, c) {
                    index.set(x, y, ti as i32);
                }
            }
        }
    }
    index
}

fn point_in_triangle(p: (f64, f64), a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let sign = |p1: (f64, f64), p2: (f64, f64), p3: (f64, f64)| {
        (p1.0 - p3.0) * (p2.1 - p3.1) - (p2.0 - p3.0) * (p1.1 - p3.1)
    };
    let d1 = sign(p, a, b);
    let d2 = sign(p, b, c);
    let d3 = sign(p, c, a);
    let has_neg = d1 < -1e-9 || d2 < -1e-9 || d3 < -1e-9;
    let has_pos = d1 > 1e-9 || d2 > 1e-9 || d3 > 1e-9;
    !(has_neg && has_pos)
}

/// Checkerboard iterations at scale 0 scoring candidates with the prior
/// penalty on top of the aggregated photometric cost. An empty model leaves
/// the pass identical to a photometric one.
#[allow(clippy::too_many_arguments)]
pub fn run_prior_pass(
    map: &mut HypothesisMap,
    reference: &View,
    sources: &[&View],
    model: &PriorModel,
    iterations: u32,
    lambda: f64,
    sigma: f64,
    tau_hold: f64,
    range: (f64, f64),
) {
    let prior_raster = model.depth_raster(&reference.camera);
    let src_views: Vec<SourceView> =
        sources.iter().map(|v| SourceView::new(&reference.camera, &v.camera, &v.image)).collect();
    let ev = Evaluator::new(
        &reference.camera,
        &reference.image,
        src_views,
        SparseWindow::new(0),
        PassMode::Prior { prior_depth: &prior_raster, lambda, sigma },
    );
    let stencil = PropagationStencil::new();
    prime(map, &ev);
    for t in 0..iterations {
        for color in [0u8, 1u8] {
            checkerboard_pass(map, &ev, &stencil, color, tau_hold, t, range);
        }
    }
}

/// Planes for seeding maps from anchors in diagnostics: the prior depth and
/// per-triangle normal of the covering triangle as a hypothesis.
pub fn hypothesis_from_prior(model: &PriorModel, cam: &CameraModel, p: (usize, usize)) -> Option<PlaneHypothesis> {
    let ti = model.tri_index.get(p.0, p.1);
    if ti < 0 {
        return None;
    }
    let depth = model.prior_depth(cam, p)?;
    Some(PlaneHypothesis { normal: model.planes[ti as usize].0, depth })
}
