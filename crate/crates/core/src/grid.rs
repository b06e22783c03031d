//! Rasters, boxes and response maps shared by the rest of the crate.
//!
//! Image coordinates are continuous: pixel `(i, j)` covers `[i, i + 1) x [j, j + 1)`
//! so its center sits at `(i + 0.5, j + 0.5)`. Bounding boxes are center-based.

use crate::error::{Error, Result};

/// Row-major image with 1 or 3 channels and intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRaster {
    width: usize,
    height: usize,
    channels: usize,
    values: Vec<f64>,
}

impl ImageRaster {
    pub fn new(width: usize, height: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "empty raster {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidRaster(format!(
                "unsupported channel count {channels}"
            )));
        }
        if values.len() != width * height * channels {
            return Err(Error::InvalidRaster(format!(
                "expected {} values, got {}",
                width * height * channels,
                values.len()
            )));
        }
        if let Some(v) = values
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidRaster(format!("value {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            values,
        })
    }

    /// Skips value validation; callers guarantee values already lie in `[0, 1]`.
    pub(crate) fn from_clamped(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        Self {
            width,
            height,
            channels: 1,
            values,
        }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    /// Single-channel raster from a function of `(x, y)`; results are clamped to `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self::new(width, height, 1, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.values[(y * self.width + x) * self.channels + c]
    }

    /// Luma (Rec. 601 weights) of a pixel; identity on grayscale rasters.
    #[inline]
    pub fn luma(&self, x: usize, y: usize) -> f64 {
        if self.channels == 1 {
            self.values[y * self.width + x]
        } else {
            let i = (y * self.width + x) * 3;
            0.299 * self.values[i] + 0.587 * self.values[i + 1] + 0.114 * self.values[i + 2]
        }
    }

    pub fn to_grayscale(&self) -> ImageRaster {
        if self.channels == 1 {
            return self.clone();
        }
        let mut values = Vec::with_capacity(self.width * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                values.push(self.luma(x, y).clamp(0.0, 1.0));
            }
        }
        ImageRaster {
            width: self.width,
            height: self.height,
            channels: 1,
            values,
        }
    }

    /// Bilinear luma sample at continuous image coordinates with edge replication.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let fx = (x - 0.5).clamp(0.0, (self.width - 1) as f64);
        let fy = (y - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = fx as usize;
        let y0 = fy as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let ax = fx - x0 as f64;
        let ay = fy - y0 as f64;
        let top = self.luma(x0, y0) * (1.0 - ax) + self.luma(x1, y0) * ax;
        let bottom = self.luma(x0, y1) * (1.0 - ax) + self.luma(x1, y1) * ax;
        top * (1.0 - ay) + bottom * ay
    }
}

/// Center-based axis-aligned box in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        let b = Self { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    /// Box from the benchmark's top-left `x, y, w, h` convention.
    pub fn from_top_left(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(x + w / 2.0, y + h / 2.0, w, h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::InvalidBox(format!(
                "non-finite center ({}, {})",
                self.cx, self.cy
            )));
        }
        if !(self.w.is_finite() && self.h.is_finite() && self.w > 0.0 && self.h > 0.0) {
            return Err(Error::InvalidBox(format!(
                "non-positive size {}x{}",
                self.w, self.h
            )));
        }
        Ok(())
    }

    pub fn left(&self) -> f64 {
        self.cx - self.w / 2.0
    }

    pub fn top(&self) -> f64 {
        self.cy - self.h / 2.0
    }

    pub fn right(&self) -> f64 {
        self.cx + self.w / 2.0
    }

    pub fn bottom(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn scaled(&self, factor: f64) -> BoundingBox {
        BoundingBox {
            cx: self.cx,
            cy: self.cy,
            w: self.w * factor,
            h: self.h * factor,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.cx, self.cy, self.w, self.h]
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self> {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    pub m: usize,
    pub q: usize,
}

impl GridPoint {
    pub fn new(m: usize, q: usize) -> Self {
        Self { m, q }
    }
}

/// `rows x cols` grid of correlation scores plus the affine map from cells to pixels:
/// `image_pos(m, q) = origin + cell_size * (q, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    rows: usize,
    cols: usize,
    scores: Vec<f64>,
    origin: (f64, f64),
    cell_size: (f64, f64),
}

impl ResponseMap {
    pub fn new(
        rows: usize,
        cols: usize,
        scores: Vec<f64>,
        origin: (f64, f64),
        cell_size: (f64, f64),
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMap(format!("empty map {rows}x{cols}")));
        }
        if scores.len() != rows * cols {
            return Err(Error::InvalidMap(format!(
                "expected {} scores, got {}",
                rows * cols,
                scores.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidMap("non-finite score".into()));
        }
        if !(origin.0.is_finite() && origin.1.is_finite()) {
            return Err(Error::InvalidMap("non-finite origin".into()));
        }
        if !(cell_size.0.is_finite()
            && cell_size.1.is_finite()
            && cell_size.0 > 0.0
            && cell_size.1 > 0.0)
        {
            return Err(Error::InvalidMap(format!(
                "cell size must be positive, got {:?}",
                cell_size
            )));
        }
        Ok(Self {
            rows,
            cols,
            scores,
            origin,
            cell_size,
        })
    }

    /// Map with unit cells anchored at the image origin.
    pub fn unit(rows: usize, cols: usize, scores: Vec<f64>) -> Result<Self> {
        Self::new(rows, cols, scores, (0.0, 0.0), (1.0, 1.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn cell_size(&self) -> (f64, f64) {
        self.cell_size
    }

    #[inline]
    pub fn score(&self, m: usize, q: usize) -> f64 {
        self.scores[m * self.cols + q]
    }

    /// Maximum cell; ties go to the smallest `(m, q)`.
    pub fn peak(&self) -> (GridPoint, f64) {
        let mut best = 0;
        for (i, &s) in self.scores.iter().enumerate() {
            if s > self.scores[best] {
                best = i;
            }
        }
        (
            GridPoint::new(best / self.cols, best % self.cols),
            self.scores[best],
        )
    }

    pub fn mean(&self) -> f64 {
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }

    pub fn contains(&self, p: GridPoint) -> bool {
        p.m < self.rows && p.q < self.cols
    }

    pub fn grid_to_image(&self, p: GridPoint) -> Result<(f64, f64)> {
        if !self.contains(p) {
            return Err(Error::OutOfBounds {
                m: p.m,
                q: p.q,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(self.cell_to_image(p.m as f64, p.q as f64))
    }

    /// Affine map for fractional cell coordinates; no bounds check.
    pub fn cell_to_image(&self, m: f64, q: f64) -> (f64, f64) {
        (
            self.origin.0 + self.cell_size.0 * q,
            self.origin.1 + self.cell_size.1 * m,
        )
    }

    /// Inverse of [`Self::cell_to_image`]; returns fractional `(m, q)`.
    pub fn image_to_grid(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (y - self.origin.1) / self.cell_size.1,
            (x - self.origin.0) / self.cell_size.0,
        )
    }

    pub fn scaled(&self, alpha: f64) -> Result<ResponseMap> {
        ResponseMap::new(
            self.rows,
            self.cols,
            self.scores.iter().map(|s| s * alpha).collect(),
            self.origin,
            self.cell_size,
        )
    }
}
