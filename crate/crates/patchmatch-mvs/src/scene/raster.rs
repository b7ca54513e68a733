//! Row-major value grids for depth, normal and cost maps.

/// A dense row-major grid of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

impl<T: Copy> Raster<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Raster<T> {
        Raster { width, height, values: vec![fill; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, values: Vec<T>) -> Raster<T> {
        assert_eq!(values.len(), width * height);
        Raster { width, height, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.values[y * self.width + x] = v;
    }

    #[inline]
    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }
}

/// Depth rasters mark holes with a quiet NaN; access goes through
/// [`DepthRaster::depth_at`] so callers never compare against a sentinel.
pub type DepthRaster = Raster<f32>;

impl DepthRaster {
    pub const INVALID: f32 = f32::NAN;

    /// Depth at an integer pixel, `None` where the map has no estimate.
    #[inline]
    pub fn depth_at(&self, x: usize, y: usize) -> Option<f32> {
        let v = self.get(x, y);
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    /// Bilinear depth at a real position. Returns `None` outside the raster
    /// or when any of the four supporting samples is invalid.
    pub fn depth_bilinear(&self, x: f64, y: f64) -> Option<f64> {
        if !(x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64) {
            return None;
        }
        let x0 = (x.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (y.floor() as usize).min(self.height.saturating_sub(2));
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let v00 = self.depth_at(x0, y0)? as f64;
        let v10 = self.depth_at(x1, y0)? as f64;
        let v01 = self.depth_at(x0, y1)? as f64;
        let v11 = self.depth_at(x1, y1)? as f64;
        Some(v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy)
    }
}
