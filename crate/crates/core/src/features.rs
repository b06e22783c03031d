//! Multi-layer feature pyramids feeding the correlation filter.
//!
//! Two hand-crafted extractors are built in: a mean-subtracted grayscale layer and a
//! soft-binned gradient-orientation layer. Externally computed feature maps can be
//! ingested from the `FPYR` tensor format and sampled per patch.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{BoundingBox, ImageRaster};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractorKind {
    Grayscale,
    GradientOrientation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub kind: ExtractorKind,
    /// Pixels pooled per feature cell, measured on the resampled patch.
    pub cell_size: usize,
    pub orientation_bins: usize,
    pub weight: f64,
}

impl LayerSpec {
    pub fn grayscale(cell_size: usize, weight: f64) -> Self {
        Self {
            kind: ExtractorKind::Grayscale,
            cell_size,
            orientation_bins: 9,
            weight,
        }
    }

    pub fn gradient(cell_size: usize, orientation_bins: usize, weight: f64) -> Self {
        Self {
            kind: ExtractorKind::GradientOrientation,
            cell_size,
            orientation_bins,
            weight,
        }
    }

    fn channels(&self) -> usize {
        match self.kind {
            ExtractorKind::Grayscale => 1,
            ExtractorKind::GradientOrientation => self.orientation_bins,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractorConfig {
    pub layers: Vec<LayerSpec>,
    /// Search window size relative to the target box.
    pub padding: f64,
    pub feature_rows: usize,
    pub feature_cols: usize,
}

impl Default for ExtractorConfig {
    /// Coarse grayscale layer plus a finer gradient layer on a 48x48 raster.
    fn default() -> Self {
        Self {
            layers: vec![LayerSpec::grayscale(1, 0.5), LayerSpec::gradient(4, 9, 1.0)],
            padding: 1.8,
            feature_rows: 48,
            feature_cols: 48,
        }
    }
}

impl ExtractorConfig {
    pub fn single(layer: LayerSpec, rows: usize, cols: usize) -> Self {
        Self {
            layers: vec![layer],
            padding: 1.8,
            feature_rows: rows,
            feature_cols: cols,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("at least one feature layer required".into()));
        }
        if !(self.padding > 1.0 && self.padding.is_finite()) {
            return Err(Error::Config(format!(
                "padding must exceed 1, got {}",
                self.padding
            )));
        }
        if self.feature_rows == 0 || self.feature_cols == 0 {
            return Err(Error::Config("feature raster must be non-empty".into()));
        }
        for l in &self.layers {
            if l.cell_size == 0 {
                return Err(Error::Config("cell size must be positive".into()));
            }
            if l.kind == ExtractorKind::GradientOrientation && l.orientation_bins < 2 {
                return Err(Error::Config("at least 2 orientation bins required".into()));
            }
            if !(l.weight >= 0.0 && l.weight.is_finite()) {
                return Err(Error::Config(format!("invalid layer weight {}", l.weight)));
            }
        }
        if self.layers.iter().map(|l| l.weight).sum::<f64>() <= 0.0 {
            return Err(Error::Config("layer weights must not all be zero".into()));
        }
        Ok(())
    }

    /// Patch resolution needed by the finest-pooled layer.
    pub fn patch_dims(&self) -> (usize, usize) {
        let cell = self.layers.iter().map(|l| l.cell_size).max().unwrap_or(1);
        (self.feature_cols * cell, self.feature_rows * cell)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLayer {
    pub index: usize,
    pub channels: usize,
    pub rows: usize,
    pub cols: usize,
    /// `(channel, row, col)` order.
    pub values: Vec<f64>,
    pub weight: f64,
}

impl FeatureLayer {
    pub fn new(
        index: usize,
        channels: usize,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        weight: f64,
    ) -> Result<Self> {
        if channels == 0 || rows == 0 || cols == 0 {
            return Err(Error::InvalidPyramid(format!(
                "layer {index} has empty dims {channels}x{rows}x{cols}"
            )));
        }
        if values.len() != channels * rows * cols {
            return Err(Error::InvalidPyramid(format!(
                "layer {index}: expected {} values, got {}",
                channels * rows * cols,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPyramid(format!(
                "layer {index}: non-finite value"
            )));
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::InvalidPyramid(format!(
                "layer {index}: invalid weight {weight}"
            )));
        }
        Ok(Self {
            index,
            channels,
            rows,
            cols,
            values,
            weight,
        })
    }

    pub fn channel(&self, o: usize) -> &[f64] {
        let n = self.rows * self.cols;
        &self.values[o * n..(o + 1) * n]
    }

    fn channel_mut(&mut self, o: usize) -> &mut [f64] {
        let n = self.rows * self.cols;
        &mut self.values[o * n..(o + 1) * n]
    }
}

/// Feature layers extracted from one window. All layers share spatial dims so their
/// correlation responses can be summed cell by cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePyramid {
    pub layers: Vec<FeatureLayer>,
    /// Image window covered by the raster (target box grown by `padding`).
    pub patch_box: BoundingBox,
    pub padding: f64,
}

impl FeaturePyramid {
    pub fn new(layers: Vec<FeatureLayer>, patch_box: BoundingBox, padding: f64) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidPyramid("no layers".into()))?;
        let (rows, cols) = (first.rows, first.cols);
        if let Some(l) = layers.iter().find(|l| l.rows != rows || l.cols != cols) {
            return Err(Error::DimensionMismatch(format!(
                "layer {} is {}x{}, expected {rows}x{cols}",
                l.index, l.rows, l.cols
            )));
        }
        if layers.iter().map(|l| l.weight).sum::<f64>() <= 0.0 {
            return Err(Error::InvalidPyramid("layer weights sum to zero".into()));
        }
        patch_box.validate()?;
        if !(padding >= 1.0 && padding.is_finite()) {
            return Err(Error::InvalidPyramid(format!("invalid padding {padding}")));
        }
        Ok(Self {
            layers,
            patch_box,
            padding,
        })
    }

    pub fn rows(&self) -> usize {
        self.layers[0].rows
    }

    pub fn cols(&self) -> usize {
        self.layers[0].cols
    }

    /// Target extent in cells: `(rows, cols)` divided by the padding.
    pub fn target_cells(&self) -> (f64, f64) {
        (
            self.rows() as f64 / self.padding,
            self.cols() as f64 / self.padding,
        )
    }

    pub fn target_box(&self) -> BoundingBox {
        self.patch_box.scaled(1.0 / self.padding)
    }
}

/// Window of size `padding * (w, h)` centered on `target`, resampled to `out_w x out_h`
/// grayscale pixels. Samples outside the frame replicate the nearest edge pixel.
pub fn extract_patch(
    frame: &ImageRaster,
    target: &BoundingBox,
    padding: f64,
    out_w: usize,
    out_h: usize,
) -> Result<ImageRaster> {
    target.validate()?;
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidRaster("empty patch raster".into()));
    }
    let win_w = target.w * padding;
    let win_h = target.h * padding;
    let x0 = target.cx - win_w / 2.0;
    let y0 = target.cy - win_h / 2.0;
    let sx = win_w / out_w as f64;
    let sy = win_h / out_h as f64;
    let converted;
    let gray = if frame.channels() == 1 {
        frame
    } else {
        converted = frame.to_grayscale();
        &converted
    };
    let (fw, fh) = (gray.width(), gray.height());
    let plane = gray.values();
    // bilinear taps with edge clamping, identical to `ImageRaster::sample`
    let taps = |pos: f64, len: usize| -> (usize, usize, f64) {
        let f = (pos - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = f as usize;
        (i0, (i0 + 1).min(len - 1), f - i0 as f64)
    };
    let xs: Vec<(usize, usize, f64)> = (0..out_w)
        .map(|i| taps(x0 + (i as f64 + 0.5) * sx, fw))
        .collect();
    let mut values = Vec::with_capacity(out_w * out_h);
    for j in 0..out_h {
        let (r0, r1, ay) = taps(y0 + (j as f64 + 0.5) * sy, fh);
        let (row0, row1) = (
            &plane[r0 * fw..(r0 + 1) * fw],
            &plane[r1 * fw..(r1 + 1) * fw],
        );
        for &(c0, c1, ax) in &xs {
            let top = row0[c0] * (1.0 - ax) + row0[c1] * ax;
            let bottom = row1[c0] * (1.0 - ax) + row1[c1] * ax;
            values.push((top * (1.0 - ay) + bottom * ay).clamp(0.0, 1.0));
        }
    }
    Ok(ImageRaster::from_clamped(out_w, out_h, values))
}

/// Luma plane of `patch` at `w x h`: unchanged if already that size, box-averaged for
/// integer downscales, bilinear otherwise.
fn resample_plane(patch: &ImageRaster, w: usize, h: usize) -> Vec<f64> {
    let (pw, ph) = (patch.width(), patch.height());
    if pw == w && ph == h {
        return patch.to_grayscale().into_values();
    }
    if pw % w == 0 && ph % h == 0 {
        let (fx, fy) = (pw / w, ph / h);
        let norm = 1.0 / (fx * fy) as f64;
        let mut out = vec![0.0; w * h];
        let col_of: Vec<usize> = (0..pw).map(|x| x / fx).collect();
        for y in 0..ph {
            let base = (y / fy) * w;
            for x in 0..pw {
                out[base + col_of[x]] += patch.luma(x, y);
            }
        }
        out.iter_mut().for_each(|v| *v *= norm);
        return out;
    }
    let sx = pw as f64 / w as f64;
    let sy = ph as f64 / h as f64;
    let mut out = Vec::with_capacity(w * h);
    for j in 0..h {
        for i in 0..w {
            out.push(patch.sample((i as f64 + 0.5) * sx, (j as f64 + 0.5) * sy));
        }
    }
    out
}

fn grayscale_layer(
    plane: &[f64],
    w: usize,
    h: usize,
    cell: usize,
    rows: usize,
    cols: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    let col_of: Vec<usize> = (0..w).map(|x| x / cell).collect();
    for y in 0..h {
        let base = (y / cell) * cols;
        for (x, v) in plane[y * w..(y + 1) * w].iter().enumerate() {
            out[base + col_of[x]] += v;
        }
    }
    let norm = 1.0 / (cell * cell) as f64;
    out.iter_mut().for_each(|v| *v *= norm);
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    out.iter_mut().for_each(|v| *v -= mean);
    out
}

/// Orientation of `(gx, gy)` folded into `[0, pi)`, via a minimax arctangent
/// (absolute error below 2e-8 rad). Exact on the axes.
fn unsigned_angle(gx: f64, gy: f64) -> f64 {
    let (gx, gy) = if gy < 0.0 || (gy == 0.0 && gx < 0.0) {
        (-gx, -gy)
    } else {
        (gx, gy)
    };
    let (ax, ay) = (gx.abs(), gy);
    let (num, den, swap) = if ay <= ax {
        (ay, ax, false)
    } else {
        (ax, ay, true)
    };
    let t = num / den;
    let t2 = t * t;
    const C: [f64; 10] = [
        0.999_999_984_125_848_7,
        -0.333_331_947_241_155_34,
        0.199_966_257_419_914_06,
        -0.142_484_158_893_882_6,
        0.108_822_247_010_485_79,
        -0.082_226_929_114_078_02,
        0.055_144_162_043_732_12,
        -0.028_581_334_085_341_945,
        0.009_606_263_538_792_827,
        -0.001_516_382_274_002_951_3,
    ];
    let mut a = C.iter().rev().fold(0.0, |acc, &c| acc * t2 + c) * t;
    if swap {
        a = PI / 2.0 - a;
    }
    if gx < 0.0 {
        a = PI - a;
    }
    if a >= PI {
        0.0
    } else {
        a
    }
}

fn gradient_layer(
    plane: &[f64],
    w: usize,
    h: usize,
    cell: usize,
    bins: usize,
    rows: usize,
    cols: usize,
) -> Vec<f64> {
    let n = rows * cols;
    let mut out = vec![0.0; bins * n];
    let per_bin = bins as f64 / PI;
    let col_of: Vec<usize> = (0..w).map(|x| x / cell).collect();
    for y in 0..h {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(h - 1);
        let row = &plane[y * w..(y + 1) * w];
        let (row_up, row_down) = (
            &plane[up * w..(up + 1) * w],
            &plane[down * w..(down + 1) * w],
        );
        let cell_row = (y / cell) * cols;
        for x in 0..w {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(w - 1);
            let gx = row[right] - row[left];
            let gy = row_down[x] - row_up[x];
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let pos = unsigned_angle(gx, gy) * per_bin;
            // pos >= 0, so truncation is floor
            let mut b0 = pos as usize;
            let frac = pos - b0 as f64;
            if b0 >= bins {
                b0 -= bins;
            }
            let b1 = if b0 + 1 == bins { 0 } else { b0 + 1 };
            let cell_idx = cell_row + col_of[x];
            out[b0 * n + cell_idx] += (1.0 - frac) * mag;
            out[b1 * n + cell_idx] += frac * mag;
        }
    }
    let norm = 1.0 / (cell * cell) as f64;
    out.iter_mut().for_each(|v| *v *= norm);
    out
}

/// Deterministic feature pyramid of a patch. Each layer resamples the patch to
/// `feature_{rows,cols} * cell_size` pixels and pools `cell_size` squares.
pub fn extract_features(
    patch: &ImageRaster,
    patch_box: BoundingBox,
    cfg: &ExtractorConfig,
) -> Result<FeaturePyramid> {
    cfg.validate()?;
    let (rows, cols) = (cfg.feature_rows, cfg.feature_cols);
    let mut layers = Vec::with_capacity(cfg.layers.len());
    for (index, spec) in cfg.layers.iter().enumerate() {
        let cell = spec.cell_size;
        if patch.width() < cell || patch.height() < cell {
            return Err(Error::PatchTooSmall {
                width: patch.width(),
                height: patch.height(),
                cell,
            });
        }
        let (w, h) = (cols * cell, rows * cell);
        let plane = resample_plane(patch, w, h);
        let values = match spec.kind {
            ExtractorKind::Grayscale => grayscale_layer(&plane, w, h, cell, rows, cols),
            ExtractorKind::GradientOrientation => {
                gradient_layer(&plane, w, h, cell, spec.orientation_bins, rows, cols)
            }
        };
        layers.push(FeatureLayer::new(
            index,
            spec.channels(),
            rows,
            cols,
            values,
            spec.weight,
        )?);
    }
    FeaturePyramid::new(layers, patch_box, cfg.padding)
}

/// `0.5 (1 - cos(2 pi n / (N - 1)))`; a length-1 window is 1.
pub fn hann(n: usize, len: usize) -> f64 {
    if len <= 1 {
        return 1.0;
    }
    0.5 * (1.0 - (2.0 * PI * n as f64 / (len - 1) as f64).cos())
}

pub fn apply_cosine_window(mut pyramid: FeaturePyramid) -> FeaturePyramid {
    for layer in &mut pyramid.layers {
        let (rows, cols) = (layer.rows, layer.cols);
        let wr: Vec<f64> = (0..rows).map(|m| hann(m, rows)).collect();
        let wc: Vec<f64> = (0..cols).map(|q| hann(q, cols)).collect();
        for o in 0..layer.channels {
            let ch = layer.channel_mut(o);
            for m in 0..rows {
                for q in 0..cols {
                    ch[m * cols + q] *= wr[m] * wc[q];
                }
            }
        }
    }
    pyramid
}

/// Patch extraction, feature extraction and cosine windowing for one box.
pub fn pyramid_at(
    frame: &ImageRaster,
    target: &BoundingBox,
    cfg: &ExtractorConfig,
) -> Result<FeaturePyramid> {
    let (pw, ph) = cfg.patch_dims();
    let patch = extract_patch(frame, target, cfg.padding, pw, ph)?;
    let pyramid = extract_features(&patch, target.scaled(cfg.padding), cfg)?;
    Ok(apply_cosine_window(pyramid))
}

const MAGIC: &[u8; 4] = b"FPYR";
const VERSION: u8 = 1;

/// Encodes frames in the `FPYR` tensor format: magic, version, then per frame a
/// little-endian header (`u32` frame index, `u16` layer count, per layer `u16` channels,
/// rows, cols and `f32` weight) followed by `f32` values in layer/channel/row/col order.
pub fn encode_feature_frames(frames: &[(u32, &FeaturePyramid)]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for (index, pyr) in frames {
        out.extend_from_slice(&index.to_le_bytes());
        let count = u16::try_from(pyr.layers.len())
            .map_err(|_| Error::MalformedHeader("too many layers".into()))?;
        out.extend_from_slice(&count.to_le_bytes());
        for l in &pyr.layers {
            for d in [l.channels, l.rows, l.cols] {
                let d = u16::try_from(d)
                    .map_err(|_| Error::MalformedHeader(format!("dimension {d} exceeds u16")))?;
                out.extend_from_slice(&d.to_le_bytes());
            }
            out.extend_from_slice(&(l.weight as f32).to_le_bytes());
        }
        for l in &pyr.layers {
            for v in &l.values {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn write_feature_file(path: &Path, frames: &[(u32, &FeaturePyramid)]) -> Result<()> {
    let bytes = encode_feature_frames(frames)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated(format!(
                "{what} needs {n} bytes at offset {}, {} available",
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        let b = self.take(4, what)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Decodes every frame of an `FPYR` buffer. Pyramids cover the whole frame in cell
/// units: `patch_box` is centered on the raster with size `cols x rows` and padding 1.
pub fn decode_feature_frames(bytes: &[u8]) -> Result<Vec<(u32, FeaturePyramid)>> {
    if bytes.len() < 5 {
        return Err(Error::MalformedHeader(
            "file shorter than magic and version".into(),
        ));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::MalformedHeader("bad magic, expected FPYR".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::MalformedHeader(format!(
            "unsupported version {}",
            bytes[4]
        )));
    }
    let mut cur = Cursor { bytes, pos: 5 };
    let mut frames = Vec::new();
    while cur.pos < bytes.len() {
        let index = cur.u32("frame index")?;
        let count = cur.u16("layer count")? as usize;
        if count == 0 {
            return Err(Error::MalformedHeader(format!(
                "frame {index} declares 0 layers"
            )));
        }
        let mut dims = Vec::with_capacity(count);
        for l in 0..count {
            let o = cur.u16("channel count")? as usize;
            let r = cur.u16("rows")? as usize;
            let c = cur.u16("cols")? as usize;
            let w = cur.f32("layer weight")? as f64;
            if o == 0 || r == 0 || c == 0 {
                return Err(Error::MalformedHeader(format!(
                    "frame {index} layer {l} has empty dims {o}x{r}x{c}"
                )));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::MalformedHeader(format!(
                    "frame {index} layer {l} has invalid weight {w}"
                )));
            }
            dims.push((o, r, c, w));
        }
        let (_, r0, c0, _) = dims[0];
        if let Some((l, _)) = dims
            .iter()
            .enumerate()
            .find(|(_, d)| d.1 != r0 || d.2 != c0)
        {
            return Err(Error::DimensionMismatch(format!(
                "frame {index} layer {l} spatial dims differ from layer 0 ({r0}x{c0})"
            )));
        }
        let mut layers = Vec::with_capacity(count);
        for (l, &(o, r, c, w)) in dims.iter().enumerate() {
            let n = o * r * c;
            let raw = cur.take(4 * n, &format!("frame {index} layer {l} payload"))?;
            let values: Vec<f64> = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect();
            layers.push(FeatureLayer::new(l, o, r, c, values, w)?);
        }
        let patch_box = BoundingBox::new(c0 as f64 / 2.0, r0 as f64 / 2.0, c0 as f64, r0 as f64)?;
        frames.push((index, FeaturePyramid::new(layers, patch_box, 1.0)?));
    }
    Ok(frames)
}

pub fn read_feature_file(path: &Path) -> Result<Vec<(u32, FeaturePyramid)>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_feature_frames(&bytes)
}

pub fn load_external_features(path: &Path, frame_index: u32) -> Result<FeaturePyramid> {
    read_feature_file(path)?
        .into_iter()
        .find(|(i, _)| *i == frame_index)
        .map(|(_, p)| p)
        .ok_or(Error::FrameNotFound(frame_index))
}

/// Samples a whole-frame feature pyramid over the padded window around `target`,
/// producing a `rows x cols` raster per channel. `frame_dims` is the image size in
/// pixels the feature maps span.
pub fn sample_dense_features(
    dense: &FeaturePyramid,
    frame_dims: (usize, usize),
    target: &BoundingBox,
    padding: f64,
    rows: usize,
    cols: usize,
) -> Result<FeaturePyramid> {
    target.validate()?;
    let (fw, fh) = (frame_dims.0 as f64, frame_dims.1 as f64);
    let (dr, dc) = (dense.rows(), dense.cols());
    let kx = dc as f64 / fw;
    let ky = dr as f64 / fh;
    let win_w = target.w * padding;
    let win_h = target.h * padding;
    let x0 = target.cx - win_w / 2.0;
    let y0 = target.cy - win_h / 2.0;
    let taps = |coord: f64, len: usize| {
        let f = (coord - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = f as usize;
        (i0, (i0 + 1).min(len - 1), f - i0 as f64)
    };
    let xs: Vec<_> = (0..cols)
        .map(|q| taps((x0 + (q as f64 + 0.5) * win_w / cols as f64) * kx, dc))
        .collect();
    let ys: Vec<_> = (0..rows)
        .map(|m| taps((y0 + (m as f64 + 0.5) * win_h / rows as f64) * ky, dr))
        .collect();
    let mut layers = Vec::with_capacity(dense.layers.len());
    for layer in &dense.layers {
        let mut values = Vec::with_capacity(layer.channels * rows * cols);
        for o in 0..layer.channels {
            let ch = layer.channel(o);
            for &(y0i, y1i, ay) in &ys {
                for &(x0i, x1i, ax) in &xs {
                    let top = ch[y0i * dc + x0i] * (1.0 - ax) + ch[y0i * dc + x1i] * ax;
                    let bottom = ch[y1i * dc + x0i] * (1.0 - ax) + ch[y1i * dc + x1i] * ax;
                    values.push(top * (1.0 - ay) + bottom * ay);
                }
            }
        }
        layers.push(FeatureLayer::new(
            layer.index,
            layer.channels,
            rows,
            cols,
            values,
            layer.weight,
        )?);
    }
    Ok(apply_cosine_window(FeaturePyramid::new(
        layers,
        target.scaled(padding),
        padding,
    )?))
}
