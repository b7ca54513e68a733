//! Candidate evaluation: one plane hypothesis against all source views.

use super::map::ViewWeights;
use crate::cost::{self, RefPatch, SparseWindow};
use crate::geometry::{self, PlaneHypothesis, RelativePose};
use crate::prior;
use crate::scene::{CameraModel, DepthRaster, GrayImage, Raster};
use smallvec::SmallVec;

/// A source view prepared for matching against one reference view.
pub struct SourceView<'a> {
    pub camera: &'a CameraModel,
    pub image: &'a GrayImage,
    pub rel: RelativePose,
}

impl<'a> SourceView<'a> {
    pub fn new(reference: &CameraModel, camera: &'a CameraModel, image: &'a GrayImage) -> Self {
        SourceView { camera, image, rel: geometry::relative_pose(reference, camera) }
    }
}

/// What the pass objective is made of.
pub enum PassMode<'a> {
    /// Pure photometric: objective = m_p.
    Photometric,
    /// Photometric plus weighted geometric consistency against the current
    /// depth maps of the source views (parallel to the evaluator's sources):
    /// objective = m_p + eta * m_g.
    Geometric { eta: f64, source_depths: &'a [&'a DepthRaster] },
    /// Photometric plus a bounded penalty against a precomputed prior depth
    /// raster (NaN where the prior has no coverage):
    /// objective = m_p + lambda * (1 - exp(-r^2 / 2 sigma^2)).
    Prior { prior_depth: &'a Raster<f32>, lambda: f64, sigma: f64 },
}

/// Everything needed to score hypotheses for one reference view.
pub struct Evaluator<'a> {
    pub ref_cam: &'a CameraModel,
    pub ref_img: &'a GrayImage,
    pub sources: Vec<SourceView<'a>>,
    pub window: SparseWindow,
    pub mode: PassMode<'a>,
}

/// Result of scoring one hypothesis.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub per_view_photo: SmallVec<[f64; 8]>,
    pub per_view_reproj: SmallVec<[f64; 8]>,
    pub m_p: f64,
    pub m_g: f64,
    pub objective: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        ref_cam: &'a CameraModel,
        ref_img: &'a GrayImage,
        sources: Vec<SourceView<'a>>,
        window: SparseWindow,
        mode: PassMode<'a>,
    ) -> Self {
        assert!(!sources.is_empty(), "need at least one source view");
        if let PassMode::Geometric { source_depths, .. } = &mode {
            assert_eq!(source_depths.len(), sources.len());
        }
        Evaluator { ref_cam, ref_img, sources, window, mode }
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    /// Score `plane` at pixel `p` using the given view weights.
    pub fn evaluate(
        &self,
        p: (usize, usize),
        patch: &RefPatch,
        plane: &PlaneHypothesis,
        weights: &[f64],
    ) -> Evaluation {
        let pf = (p.0 as f64, p.1 as f64);
        let mut per_view_photo: SmallVec<[f64; 8]> = SmallVec::with_capacity(self.sources.len());
        let mut per_view_reproj: SmallVec<[f64; 8]> = SmallVec::new();
        for src in &self.sources {
            let c = match geometry::homography_with(&src.rel, self.ref_cam, src.camera, pf, plane) {
                Some(h) => cost::photometric_cost_with(patch, src.image, &h),
                None => cost::WORST_COST,
            };
            per_view_photo.push(c);
        }
        if let PassMode::Geometric { source_depths, .. } = &self.mode {
            for (src, depth) in self.sources.iter().zip(source_depths.iter()) {
                per_view_reproj.push(geometry::forward_backward_error_with(
                    &src.rel,
                    self.ref_cam,
                    src.camera,
                    pf,
                    plane.depth,
                    depth,
                ));
            }
        }

        self.assemble(p, plane, per_view_photo, per_view_reproj, weights)
    }

    /// Recompute the aggregates of an existing evaluation under fresh
    /// weights; the per-view costs are reused as-is.
    pub fn reweigh(&self, p: (usize, usize), plane: &PlaneHypothesis, eval: Evaluation, weights: &[f64]) -> Evaluation {
        self.assemble(p, plane, eval.per_view_photo, eval.per_view_reproj, weights)
    }

    fn assemble(
        &self,
        p: (usize, usize),
        plane: &PlaneHypothesis,
        per_view_photo: SmallVec<[f64; 8]>,
        per_view_reproj: SmallVec<[f64; 8]>,
        weights: &[f64],
    ) -> Evaluation {
        let m_p = cost::aggregate(&per_view_photo, weights).unwrap_or(cost::WORST_COST);
        let (m_g, objective) = match &self.mode {
            PassMode::Photometric => (0.0, m_p),
            PassMode::Geometric { eta, .. } => {
                let m_g = cost::geometric_cost(&per_view_reproj, weights).unwrap_or(geometry::REPROJECTION_CEILING);
                (m_g, m_p + eta * m_g)
            }
            PassMode::Prior { prior_depth, lambda, sigma } => {
                let d_prior = prior_depth.get(p.0, p.1);
                let obj = prior::prior_assisted_cost(
                    m_p,
                    plane.depth,
                    if d_prior.is_nan() { None } else { Some(d_prior as f64) },
                    *lambda,
                    *sigma,
                );
                (0.0, obj)
            }
        };
        Evaluation { per_view_photo, per_view_reproj, m_p, m_g, objective }
    }

    /// Fresh uniform weights sized for this evaluator's sources.
    pub fn uniform_weights(&self) -> ViewWeights {
        smallvec::smallvec![1.0; self.sources.len()]
    }
}
