//! Row-major grayscale and depth rasters with bilinear sampling.
//!
//! Intensities live in `[0, 1]`. Depth is in meters; a stored value of `0` or
//! any non-finite value means "no measurement". Bilinear sampling returns
//! `None` whenever any of the four stencil neighbors is out of bounds (or, for
//! depth, invalid), so callers never consume half-valid interpolations.

use crate::parallel;

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

fn bilinear(
    width: usize,
    height: usize,
    data: &[f64],
    x: f64,
    y: f64,
    valid: impl Fn(f64) -> bool,
) -> Option<f64> {
    if !x.is_finite() || !y.is_finite() || x < 0.0 || y < 0.0 {
        return None;
    }
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    if x0 + 1 >= width || y0 + 1 >= height {
        return None;
    }
    let wx = x - x0 as f64;
    let wy = y - y0 as f64;
    let idx = y0 * width + x0;
    let v00 = data[idx];
    let v10 = data[idx + 1];
    let v01 = data[idx + width];
    let v11 = data[idx + width + 1];
    if !valid(v00) || !valid(v10) || !valid(v01) || !valid(v11) {
        return None;
    }
    let top = v00 * (1.0 - wx) + v10 * wx;
    let bot = v01 * (1.0 - wx) + v11 * wx;
    Some(top * (1.0 - wy) + bot * wy)
}

/// Bilinear value plus the exact partial derivatives of the interpolant at
/// `(x, y)`. Used by the alignment Jacobians: differentiating the interpolant
/// itself (rather than sampling a precomputed gradient raster) keeps analytic
/// Jacobians consistent with finite differences of the sampled residual.
fn bilinear_with_grad(
    width: usize,
    height: usize,
    data: &[f64],
    x: f64,
    y: f64,
    valid: impl Fn(f64) -> bool,
) -> Option<(f64, f64, f64)> {
    if !x.is_finite() || !y.is_finite() || x < 0.0 || y < 0.0 {
        return None;
    }
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    if x0 + 1 >= width || y0 + 1 >= height {
        return None;
    }
    let wx = x - x0 as f64;
    let wy = y - y0 as f64;
    let idx = y0 * width + x0;
    let v00 = data[idx];
    let v10 = data[idx + 1];
    let v01 = data[idx + width];
    let v11 = data[idx + width + 1];
    if !valid(v00) || !valid(v10) || !valid(v01) || !valid(v11) {
        return None;
    }
    let value = v00 * (1.0 - wx) * (1.0 - wy) + v10 * wx * (1.0 - wy) + v01 * (1.0 - wx) * wy
        + v11 * wx * wy;
    let gx = (v10 - v00) * (1.0 - wy) + (v11 - v01) * wy;
    let gy = (v01 - v00) * (1.0 - wx) + (v11 - v10) * wx;
    Some((value, gx, gy))
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "sample count must be w*h");
        debug_assert!(
            data.iter().all(|v| (0.0..=1.0).contains(v)),
            "intensities must lie in [0,1]"
        );
        Self { width, height, data }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        bilinear(self.width, self.height, &self.data, x, y, |_| true)
    }

    #[inline]
    pub fn sample_with_grad(&self, x: f64, y: f64) -> Option<(f64, f64, f64)> {
        bilinear_with_grad(self.width, self.height, &self.data, x, y, |_| true)
    }

    /// Central-difference gradient at an integer pixel, zero on the border.
    pub fn gradient_at(&self, x: usize, y: usize) -> (f64, f64) {
        if x == 0 || y == 0 || x + 1 >= self.width || y + 1 >= self.height {
            return (0.0, 0.0);
        }
        let gx = 0.5 * (self.get(x + 1, y) - self.get(x - 1, y));
        let gy = 0.5 * (self.get(x, y + 1) - self.get(x, y - 1));
        (gx, gy)
    }

    /// Half-resolution image by 2x2 box averaging.
    pub fn downsample(&self) -> GrayImage {
        let w = (self.width / 2).max(1);
        let h = (self.height / 2).max(1);
        let rows = parallel::map_collect(h, |y| {
            let mut row = Vec::with_capacity(w);
            for x in 0..w {
                let x0 = (2 * x).min(self.width - 1);
                let x1 = (2 * x + 1).min(self.width - 1);
                let y0 = (2 * y).min(self.height - 1);
                let y1 = (2 * y + 1).min(self.height - 1);
                let sum = self.get(x0, y0) + self.get(x1, y0) + self.get(x0, y1) + self.get(x1, y1);
                row.push(sum * 0.25);
            }
            row
        });
        GrayImage::new(w, h, rows.concat())
    }

    /// Image pyramid with `levels` entries; level 0 is `self`.
    pub fn pyramid(&self, levels: usize) -> Vec<GrayImage> {
        let mut out = Vec::with_capacity(levels.max(1));
        out.push(self.clone());
        for _ in 1..levels {
            let next = out.last().unwrap().downsample();
            out.push(next);
        }
        out
    }
}

impl DepthImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "sample count must be w*h");
        // Negative depths are nonsensical; normalize non-finite to invalid (0).
        let data = data
            .into_iter()
            .map(|d| if d.is_finite() && d > 0.0 { d } else { 0.0 })
            .collect();
        Self { width, height, data }
    }

    pub fn invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let d = self.data[y * self.width + x];
        (d > 0.0).then_some(d)
    }

    #[inline]
    pub fn get_raw(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Bilinear depth; invalid when any stencil neighbor is missing.
    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        bilinear(self.width, self.height, &self.data, x, y, |v| v > 0.0)
    }

    #[inline]
    pub fn sample_with_grad(&self, x: f64, y: f64) -> Option<(f64, f64, f64)> {
        bilinear_with_grad(self.width, self.height, &self.data, x, y, |v| v > 0.0)
    }

    /// Half-resolution depth: average of the valid samples in each 2x2 block,
    /// invalid when the whole block is invalid.
    pub fn downsample(&self) -> DepthImage {
        let w = (self.width / 2).max(1);
        let h = (self.height / 2).max(1);
        let rows = parallel::map_collect(h, |y| {
            let mut row = Vec::with_capacity(w);
            for x in 0..w {
                let mut sum = 0.0;
                let mut n = 0usize;
                for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let sx = (2 * x + dx).min(self.width - 1);
                    let sy = (2 * y + dy).min(self.height - 1);
                    if let Some(d) = self.get(sx, sy) {
                        sum += d;
                        n += 1;
                    }
                }
                row.push(if n > 0 { sum / n as f64 } else { 0.0 });
            }
            row
        });
        DepthImage::new(w, h, rows.concat())
    }

    pub fn pyramid(&self, levels: usize) -> Vec<DepthImage> {
        let mut out = Vec::with_capacity(levels.max(1));
        out.push(self.clone());
        for _ in 1..levels {
            let next = out.last().unwrap().downsample();
            out.push(next);
        }
        out
    }
}

/// Fixed-weight luma conversion (0.299, 0.587, 0.114), 8-bit in, [0,1] out.
pub fn rgb_to_gray(width: usize, height: usize, rgb: &[u8]) -> GrayImage {
    assert_eq!(rgb.len(), width * height * 3);
    let data = rgb
        .chunks_exact(3)
        .map(|p| (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64) / 255.0)
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    GrayImage::new(width, height, data)
}
