//! Fourier-domain correlation filter (ridge regression against a Gaussian label).
//!
//! For every layer the model keeps one numerator per channel and a channel-summed
//! energy denominator. A response is the inverse transform of
//! `sum_l weight_l * sum_o numerator_lo * F_lo / (D_l + lambda)`.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::features::{FeatureLayer, FeaturePyramid};
use crate::grid::{GridPoint, ResponseMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    /// Label sigma as a fraction of the target diagonal in cells.
    pub label_sigma_factor: f64,
    pub lambda: f64,
    pub learning_rate: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            label_sigma_factor: 0.1,
            lambda: 1e-4,
            learning_rate: 0.01,
        }
    }
}

/// Separable 2-D FFT over a row-major `rows x cols` buffer.
#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fft2({}x{})", self.rows, self.cols)
    }
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let (rows, cols) = (self.rows, self.cols);
        let (rf, cf) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        rf.process(data);
        let mut t = vec![Complex64::new(0.0, 0.0); rows * cols];
        for m in 0..rows {
            for q in 0..cols {
                t[q * rows + m] = data[m * cols + q];
            }
        }
        cf.process(&mut t);
        for q in 0..cols {
            for m in 0..rows {
                data[m * cols + q] = t[q * rows + m];
            }
        }
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.run(&mut data, false);
        data
    }

    /// Spectra of two real planes from one complex transform of `a + i b`.
    pub fn forward_real_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let (rows, cols) = (self.rows, self.cols);
        let mut z: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.run(&mut z, false);
        let mut fa = Vec::with_capacity(z.len());
        let mut fb = Vec::with_capacity(z.len());
        for m in 0..rows {
            let mm = (rows - m) % rows;
            for q in 0..cols {
                let qq = (cols - q) % cols;
                let zk = z[m * cols + q];
                let zc = z[mm * cols + qq].conj();
                fa.push((zk + zc) * 0.5);
                let d = zk - zc;
                fb.push(Complex64::new(d.im * 0.5, -d.re * 0.5));
            }
        }
        (fa, fb)
    }

    /// Spectra of every channel of a layer, transforming channels in pairs.
    pub fn forward_channels(&self, layer: &FeatureLayer) -> Vec<Vec<Complex64>> {
        let mut out = Vec::with_capacity(layer.channels);
        let mut o = 0;
        while o < layer.channels {
            if o + 1 < layer.channels {
                let (a, b) = self.forward_real_pair(layer.channel(o), layer.channel(o + 1));
                out.push(a);
                out.push(b);
                o += 2;
            } else {
                out.push(self.forward_real(layer.channel(o)));
                o += 1;
            }
        }
        out
    }

    /// Unnormalized inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, true);
    }
}

#[derive(Debug, Clone)]
struct ModelLayer {
    weight: f64,
    numerators: Vec<Vec<Complex64>>,
    denominator: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CorrelationModel {
    rows: usize,
    cols: usize,
    layers: Vec<ModelLayer>,
    label_hat: Vec<Complex64>,
    label_sigma: f64,
    lambda: f64,
    fft: Fft2,
}

/// Response map of one patch with its peak and mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseScore {
    pub map: ResponseMap,
    pub peak_point: GridPoint,
    pub peak_value: f64,
    pub mean_value: f64,
}

impl ResponseScore {
    pub fn from_map(map: ResponseMap) -> Self {
        let (peak_point, peak_value) = map.peak();
        let mean_value = map.mean();
        Self {
            map,
            peak_point,
            peak_value,
            mean_value,
        }
    }

    /// Image position the map's center cell is anchored to.
    pub fn anchor(&self) -> (f64, f64) {
        let (rows, cols) = (self.map.rows(), self.map.cols());
        self.map.cell_to_image((rows / 2) as f64, (cols / 2) as f64)
    }
}

/// Gaussian centered on cell `(rows/2, cols/2)` using circular distances.
pub fn gaussian_label(rows: usize, cols: usize, sigma: f64) -> Vec<f64> {
    let (cm, cq) = ((rows / 2) as f64, (cols / 2) as f64);
    let circ = |d: f64, n: usize| {
        let n = n as f64;
        let d = d.rem_euclid(n);
        d.min(n - d)
    };
    let mut out = Vec::with_capacity(rows * cols);
    for m in 0..rows {
        let dm = circ(m as f64 - cm, rows);
        for q in 0..cols {
            let dq = circ(q as f64 - cq, cols);
            out.push((-(dm * dm + dq * dq) / (2.0 * sigma * sigma)).exp());
        }
    }
    out
}

fn training_terms(
    fft: &Fft2,
    label_hat: &[Complex64],
    pyramid: &FeaturePyramid,
    lambda: f64,
) -> Vec<ModelLayer> {
    pyramid
        .layers
        .iter()
        .map(|layer| {
            let mut denominator = vec![lambda; layer.rows * layer.cols];
            let numerators = fft
                .forward_channels(layer)
                .into_iter()
                .map(|f_hat| {
                    for (d, f) in denominator.iter_mut().zip(&f_hat) {
                        *d += f.norm_sqr();
                    }
                    label_hat
                        .iter()
                        .zip(&f_hat)
                        .map(|(g, f)| g * f.conj())
                        .collect()
                })
                .collect();
            ModelLayer {
                weight: layer.weight,
                numerators,
                denominator,
            }
        })
        .collect()
}

pub fn train_model(pyramid: &FeaturePyramid, cfg: &FilterConfig) -> CorrelationModel {
    let (rows, cols) = (pyramid.rows(), pyramid.cols());
    let (tr, tc) = pyramid.target_cells();
    let label_sigma = (cfg.label_sigma_factor * (tr * tr + tc * tc).sqrt()).max(1e-3);
    let fft = Fft2::new(rows, cols);
    let label_hat = fft.forward_real(&gaussian_label(rows, cols, label_sigma));
    let layers = training_terms(&fft, &label_hat, pyramid, cfg.lambda);
    CorrelationModel {
        rows,
        cols,
        layers,
        label_hat,
        label_sigma,
        lambda: cfg.lambda,
        fft,
    }
}

impl CorrelationModel {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn label_sigma(&self) -> f64 {
        self.label_sigma
    }

    pub fn layer_weights(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.weight).collect()
    }

    /// Copy with replaced per-layer weights.
    pub fn with_layer_weights(&self, weights: &[f64]) -> Result<CorrelationModel> {
        if weights.len() != self.layers.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} layers",
                weights.len(),
                self.layers.len()
            )));
        }
        let mut m = self.clone();
        for (l, &w) in m.layers.iter_mut().zip(weights) {
            l.weight = w;
        }
        Ok(m)
    }

    fn check_dims(&self, pyramid: &FeaturePyramid) -> Result<()> {
        if pyramid.rows() != self.rows || pyramid.cols() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "pyramid {}x{} vs model {}x{}",
                pyramid.rows(),
                pyramid.cols(),
                self.rows,
                self.cols
            )));
        }
        if pyramid.layers.len() != self.layers.len() {
            return Err(Error::DimensionMismatch(format!(
                "pyramid has {} layers, model {}",
                pyramid.layers.len(),
                self.layers.len()
            )));
        }
        for (p, m) in pyramid.layers.iter().zip(&self.layers) {
            if p.channels != m.numerators.len() {
                return Err(Error::DimensionMismatch(format!(
                    "layer {} has {} channels, model {}",
                    p.index,
                    p.channels,
                    m.numerators.len()
                )));
            }
        }
        Ok(())
    }

    /// L2 distance between the coefficient sets of two equally shaped models.
    pub fn coefficient_distance(&self, other: &CorrelationModel) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.layers.iter().zip(&other.layers) {
            for (na, nb) in a.numerators.iter().zip(&b.numerators) {
                acc += na
                    .iter()
                    .zip(nb)
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>();
            }
            acc += a
                .denominator
                .iter()
                .zip(&b.denominator)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>();
        }
        acc.sqrt()
    }
}

/// Correlates `pyramid` against the model. The map is anchored so that its center cell
/// maps to the center of the pyramid's window, with one cell spanning
/// `window / (rows, cols)` pixels.
pub fn respond(model: &CorrelationModel, pyramid: &FeaturePyramid) -> Result<ResponseScore> {
    model.check_dims(pyramid)?;
    let n = model.rows * model.cols;
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    let mut layer_acc = vec![Complex64::new(0.0, 0.0); n];
    for (ml, pl) in model.layers.iter().zip(&pyramid.layers) {
        if ml.weight == 0.0 {
            continue;
        }
        layer_acc
            .iter_mut()
            .for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (num, f_hat) in ml.numerators.iter().zip(model.fft.forward_channels(pl)) {
            for ((a, h), f) in layer_acc.iter_mut().zip(num).zip(&f_hat) {
                *a += h * f;
            }
        }
        for ((a, l), d) in acc.iter_mut().zip(&layer_acc).zip(&ml.denominator) {
            *a += l * (ml.weight / d);
        }
    }
    model.fft.inverse(&mut acc);
    let norm = 1.0 / n as f64;
    let scores: Vec<f64> = acc.iter().map(|c| c.re * norm).collect();
    let pb = &pyramid.patch_box;
    let cell = (pb.w / model.cols as f64, pb.h / model.rows as f64);
    let origin = (
        pb.cx - (model.cols / 2) as f64 * cell.0,
        pb.cy - (model.rows / 2) as f64 * cell.1,
    );
    let map = ResponseMap::new(model.rows, model.cols, scores, origin, cell)?;
    Ok(ResponseScore::from_map(map))
}

/// Scalar likelihood of a response: its mean, clamped below at zero.
pub fn likelihood_value(score: &ResponseScore) -> f64 {
    score.mean_value.max(0.0)
}

/// Linear interpolation of numerators and denominators towards the terms trained on
/// `pyramid` with rate `eta`.
pub fn update_model(
    model: &CorrelationModel,
    pyramid: &FeaturePyramid,
    eta: f64,
) -> Result<CorrelationModel> {
    model.check_dims(pyramid)?;
    let fresh = training_terms(&model.fft, &model.label_hat, pyramid, model.lambda);
    let mut next = model.clone();
    for (old, new) in next.layers.iter_mut().zip(fresh) {
        for (on, nn) in old.numerators.iter_mut().zip(new.numerators) {
            for (a, b) in on.iter_mut().zip(nn) {
                *a = *a * (1.0 - eta) + b * eta;
            }
        }
        for (a, b) in old.denominator.iter_mut().zip(new.denominator) {
            *a = *a * (1.0 - eta) + b * eta;
        }
    }
    Ok(next)
}
