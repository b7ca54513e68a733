//! Per-view optimizer state.

use crate::geometry::PlaneHypothesis;
use crate::scene::{DepthRaster, Raster};
use smallvec::SmallVec;

/// Per-view weight vector; stack-allocated for the usual view counts.
pub type ViewWeights = SmallVec<[f64; 8]>;

/// Per-pixel plane hypotheses plus the bookkeeping the optimizer needs:
/// the current objective value (`cost`), its photometric and geometric
/// components, and the per-source view weights.
#[derive(Debug, Clone)]
pub struct HypothesisMap {
    width: usize,
    height: usize,
    n_sources: usize,
    planes: Vec<PlaneHypothesis>,
    cost: Vec<f64>,
    photo: Vec<f64>,
    geom: Vec<f64>,
    weights: Vec<f64>,
    seed: u64,
    pass_counter: u64,
}

impl HypothesisMap {
    pub fn new_uninit(width: usize, height: usize, n_sources: usize, seed: u64) -> HypothesisMap {
        let n = width * height;
        HypothesisMap {
            width,
            height,
            n_sources,
            planes: vec![PlaneHypothesis::fronto(1.0); n],
            cost: vec![crate::cost::WORST_COST; n],
            photo: vec![crate::cost::WORST_COST; n],
            geom: vec![0.0; n],
            weights: vec![1.0; n * n_sources],
            seed,
            pass_counter: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Monotone pass counter; feeds the per-pixel random streams so every
    /// color pass draws from fresh streams.
    pub fn pass_counter(&self) -> u64 {
        self.pass_counter
    }

    pub fn bump_pass(&mut self) -> u64 {
        self.pass_counter += 1;
        self.pass_counter
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn plane(&self, idx: usize) -> &PlaneHypothesis {
        &self.planes[idx]
    }

    #[inline]
    pub fn cost(&self, idx: usize) -> f64 {
        self.cost[idx]
    }

    #[inline]
    pub fn photo(&self, idx: usize) -> f64 {
        self.photo[idx]
    }

    #[inline]
    pub fn geom(&self, idx: usize) -> f64 {
        self.geom[idx]
    }

    #[inline]
    pub fn weights_at(&self, idx: usize) -> &[f64] {
        &self.weights[idx * self.n_sources..(idx + 1) * self.n_sources]
    }

    pub fn store(&mut self, idx: usize, plane: PlaneHypothesis, cost: f64, photo: f64, geom: f64) {
        self.planes[idx] = plane;
        self.cost[idx] = cost;
        self.photo[idx] = photo;
        self.geom[idx] = geom;
    }

    pub fn store_weights(&mut self, idx: usize, w: &[f64]) {
        debug_assert_eq!(w.len(), self.n_sources);
        self.weights[idx * self.n_sources..(idx + 1) * self.n_sources].copy_from_slice(w);
    }

    /// Pixel indices of one checkerboard color, row-major.
    pub fn color_indices(&self, color: u8) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.width * self.height / 2 + self.width);
        for y in 0..self.height {
            for x in 0..self.width {
                if ((x + y) & 1) as u8 == color {
                    out.push(self.index(x, y));
                }
            }
        }
        out
    }

    pub fn depth_raster(&self) -> DepthRaster {
        let values = self.planes.iter().map(|p| p.depth as f32).collect();
        Raster::from_vec(self.width, self.height, values)
    }

    pub fn normal_raster(&self) -> Raster<[f32; 3]> {
        let values = self
            .planes
            .iter()
            .map(|p| [p.normal.x as f32, p.normal.y as f32, p.normal.z as f32])
            .collect();
        Raster::from_vec(self.width, self.height, values)
    }

    pub fn photo_raster(&self) -> Raster<f32> {
        let values = self.photo.iter().map(|&c| c as f32).collect();
        Raster::from_vec(self.width, self.height, values)
    }

    pub fn geom_raster(&self) -> Raster<f32> {
        let values = self.geom.iter().map(|&c| c as f32).collect();
        Raster::from_vec(self.width, self.height, values)
    }
}
