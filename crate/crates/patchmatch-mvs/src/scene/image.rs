//! Grayscale images with float intensities in `[0, 1]`.

use crate::error::{Error, Result};
use image::DynamicImage;
use std::path::Path;

/// Row-major luminance image.
#[derive(Debug, Clone)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

/// BT.601 luma weights, applied when a color image is ingested.
const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> GrayImage {
        assert_eq!(data.len(), width * height);
        GrayImage { width, height, data }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> GrayImage {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Read with coordinates clamped to the image rectangle.
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> f32 {
        let x = x.clamp(0, self.width as i64 - 1) as usize;
        let y = y.clamp(0, self.height as i64 - 1) as usize;
        self.get(x, y)
    }

    /// Bilinear sample at a real-valued position; `None` outside the image.
    #[inline]
    pub fn bilinear(&self, x: f64, y: f64) -> Option<f64> {
        if !(x >= 0.0 && y >= 0.0 && x <= (self.width - 1) as f64 && y <= (self.height - 1) as f64) {
            return None;
        }
        let x0 = (x.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (y.floor() as usize).min(self.height.saturating_sub(2));
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let v00 = self.get(x0, y0) as f64;
        let v10 = self.get(x1, y0) as f64;
        let v01 = self.get(x0, y1) as f64;
        let v11 = self.get(x1, y1) as f64;
        Some(v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy)
    }

    /// Decode any supported image file and convert it to luminance.
    pub fn load(path: &Path) -> Result<GrayImage> {
        let img = image::open(path)
            .map_err(|e| Error::Scene(format!("unreadable image {}: {e}", path.display())))?;
        Ok(GrayImage::from_dynamic(&img))
    }

    pub fn from_dynamic(img: &DynamicImage) -> GrayImage {
        let width = img.width() as usize;
        let height = img.height() as usize;
        let rgb = img.to_rgb32f();
        let mut data = Vec::with_capacity(width * height);
        for px in rgb.pixels() {
            let y = LUMA[0] * px.0[0] as f64 + LUMA[1] * px.0[1] as f64 + LUMA[2] * px.0[2] as f64;
            data.push(y as f32);
        }
        GrayImage { width, height, data }
    }

    /// Save as a 16-bit grayscale PNG (keeps quantization error at ~1.5e-5).
    pub fn save_png16(&self, path: &Path) -> Result<()> {
        let mut buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(
            self.width as u32,
            self.height as u32,
        );
        for (x, y, px) in buf.enumerate_pixels_mut() {
            let v = self.get(x as usize, y as usize).clamp(0.0, 1.0);
            px.0[0] = (v as f64 * 65535.0).round() as u16;
        }
        buf.save(path)?;
        Ok(())
    }

    /// Area-averaging resample to an arbitrary smaller size. Each target
    /// pixel integrates the source rectangle it covers, with fractional
    /// weights at the box edges.
    pub fn downsample_to(&self, new_w: usize, new_h: usize) -> GrayImage {
        assert!(new_w >= 1 && new_h >= 1);
        assert!(new_w <= self.width && new_h <= self.height);
        let sx = self.width as f64 / new_w as f64;
        let sy = self.height as f64 / new_h as f64;
        GrayImage::from_fn(new_w, new_h, |ox, oy| {
            let x_lo = ox as f64 * sx;
            let x_hi = (ox + 1) as f64 * sx;
            let y_lo = oy as f64 * sy;
            let y_hi = (oy + 1) as f64 * sy;
            let mut acc = 0.0f64;
            let mut total = 0.0f64;
            let iy_end = (y_hi.ceil() as usize).min(self.height);
            let ix_end = (x_hi.ceil() as usize).min(self.width);
            for iy in y_lo.floor() as usize..iy_end {
                let wy = (y_hi.min((iy + 1) as f64) - y_lo.max(iy as f64)).max(0.0);
                for ix in x_lo.floor() as usize..ix_end {
                    let wx = (x_hi.min((ix + 1) as f64) - x_lo.max(ix as f64)).max(0.0);
                    acc += wx * wy * self.get(ix, iy) as f64;
                    total += wx * wy;
                }
            }
            (acc / total) as f32
        })
    }
}
