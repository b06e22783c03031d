//! Multi-modal Gaussian likelihood estimated from one response map.
//!
//! The map is thresholded relative to its peak, the surviving cells are grouped
//! (connected components seed the groups, weighted EM refines them) and each group is
//! summarized by its probability-weighted mean and per-axis variance.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{GridPoint, ResponseMap};

pub const DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedPoint {
    pub x: f64,
    pub y: f64,
    pub probability: f64,
    /// Source cell in the response map.
    pub cell: GridPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thresholded {
    pub points: Vec<WeightedPoint>,
    pub tau_abs: f64,
    pub peak_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianComponent {
    pub mean: (f64, f64),
    pub variance: (f64, f64),
    pub mass: f64,
    pub member_count: usize,
}

impl GaussianComponent {
    pub fn std_dev(&self) -> (f64, f64) {
        (self.variance.0.sqrt(), self.variance.1.sqrt())
    }

    pub fn density(&self, x: f64, y: f64) -> f64 {
        self.log_density(x, y).exp()
    }

    pub fn log_density(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.mean.0;
        let dy = y - self.mean.1;
        let e = dx * dx / self.variance.0 + dy * dy / self.variance.1;
        -0.5 * e - (2.0 * PI * (self.variance.0 * self.variance.1).sqrt()).ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodMixture {
    /// Sorted by descending mass.
    pub components: Vec<GaussianComponent>,
    pub tau: f64,
    /// Ignore masses and weight every component equally.
    pub equal_weights: bool,
}

impl LikelihoodMixture {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        let k = self.components.len() as f64;
        if self.equal_weights {
            return vec![1.0 / k; self.components.len()];
        }
        let total: f64 = self.components.iter().map(|c| c.mass).sum();
        self.components.iter().map(|c| c.mass / total).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodConfig {
    /// Relative threshold for the points entering the moments.
    pub tau_moments: f64,
    /// Relative threshold for the connected components that seed clustering.
    pub tau_seed: f64,
    pub k_max: usize,
    pub sigma2_floor: f64,
    pub equal_weights: bool,
    pub em_tolerance: f64,
    pub em_max_iterations: usize,
    /// Undo the variance shrinkage caused by discarding the sub-threshold tails.
    pub truncation_correction: bool,
}

impl Default for LikelihoodConfig {
    fn default() -> Self {
        Self {
            tau_moments: 0.3,
            tau_seed: 0.5,
            k_max: 3,
            sigma2_floor: 0.01,
            equal_weights: false,
            em_tolerance: 1e-6,
            em_max_iterations: 100,
            truncation_correction: true,
        }
    }
}

/// Cells scoring strictly above `tau_rel * peak`, in image coordinates.
pub fn threshold_map(map: &ResponseMap, tau_rel: f64) -> Result<Thresholded> {
    let (_, peak_value) = map.peak();
    if !(peak_value > 0.0) {
        return Err(Error::DegenerateMap { peak: peak_value });
    }
    let tau_abs = tau_rel * peak_value;
    let mut points = Vec::new();
    for m in 0..map.rows() {
        for q in 0..map.cols() {
            let s = map.score(m, q);
            if s > tau_abs {
                let (x, y) = map.cell_to_image(m as f64, q as f64);
                points.push(WeightedPoint {
                    x,
                    y,
                    probability: s,
                    cell: GridPoint::new(m, q),
                });
            }
        }
    }
    Ok(Thresholded {
        points,
        tau_abs,
        peak_value,
    })
}

/// Probability-weighted mean and per-axis variance (floored) of a point set.
pub fn component_moments(points: &[WeightedPoint], sigma2_floor: f64) -> GaussianComponent {
    let mass: f64 = points.iter().map(|p| p.probability).sum();
    let mx = points.iter().map(|p| p.probability * p.x).sum::<f64>() / mass;
    let my = points.iter().map(|p| p.probability * p.y).sum::<f64>() / mass;
    let vx = points
        .iter()
        .map(|p| p.probability * (p.x - mx).powi(2))
        .sum::<f64>()
        / mass;
    let vy = points
        .iter()
        .map(|p| p.probability * (p.y - my).powi(2))
        .sum::<f64>()
        / mass;
    GaussianComponent {
        mean: (mx, my),
        variance: (vx.max(sigma2_floor), vy.max(sigma2_floor)),
        mass,
        member_count: points.len(),
    }
}

/// 8-connected components over the grid cells of `points`; returns one index list per
/// component in order of first appearance.
pub fn connected_components(points: &[WeightedPoint]) -> Vec<Vec<usize>> {
    if points.is_empty() {
        return Vec::new();
    }
    let rows = points.iter().map(|p| p.cell.m).max().unwrap() + 1;
    let cols = points.iter().map(|p| p.cell.q).max().unwrap() + 1;
    let mut index = vec![usize::MAX; rows * cols];
    for (i, p) in points.iter().enumerate() {
        index[p.cell.m * cols + p.cell.q] = i;
    }
    let mut label = vec![usize::MAX; points.len()];
    let mut components = Vec::new();
    for start in 0..points.len() {
        if label[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        label[start] = id;
        let mut head = 0;
        while head < members.len() {
            let cur = points[members[head]].cell;
            head += 1;
            for dm in -1i64..=1 {
                for dq in -1i64..=1 {
                    let m = cur.m as i64 + dm;
                    let q = cur.q as i64 + dq;
                    if m < 0 || q < 0 || m >= rows as i64 || q >= cols as i64 {
                        continue;
                    }
                    let j = index[m as usize * cols + q as usize];
                    if j != usize::MAX && label[j] == usize::MAX {
                        label[j] = id;
                        members.push(j);
                    }
                }
            }
        }
        components.push(members);
    }
    components
}

#[derive(Debug, Clone, Copy)]
struct EmComponent {
    weight: f64,
    mean: (f64, f64),
    var: (f64, f64),
}

impl EmComponent {
    fn log_density(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.mean.0;
        let dy = y - self.mean.1;
        -0.5 * (dx * dx / self.var.0 + dy * dy / self.var.1)
            - (2.0 * PI).ln()
            - 0.5 * (self.var.0 * self.var.1).ln()
    }
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Groups points into at most `k_max` disjoint clusters.
///
/// Connected components of the points above `seed_threshold` (absolute probability)
/// seed the clusters; the smallest-mass seeds are merged into their nearest neighbour
/// until at most `k_max` remain; a weighted diagonal-covariance EM over all points
/// refines them; every point is then hard-assigned to its most responsible component.
pub fn cluster_points(
    points: &[WeightedPoint],
    k_max: usize,
    seed_threshold: f64,
    sigma2_floor: f64,
) -> Vec<Vec<WeightedPoint>> {
    cluster_points_with(points, k_max, seed_threshold, sigma2_floor, 1e-6, 100)
}

pub fn cluster_points_with(
    points: &[WeightedPoint],
    k_max: usize,
    seed_threshold: f64,
    sigma2_floor: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Vec<Vec<WeightedPoint>> {
    if points.is_empty() {
        return Vec::new();
    }
    let k_max = k_max.max(1);
    let mut seed_points: Vec<WeightedPoint> = points
        .iter()
        .copied()
        .filter(|p| p.probability > seed_threshold)
        .collect();
    if seed_points.is_empty() {
        seed_points = points.to_vec();
    }
    let mut seeds: Vec<GaussianComponent> = connected_components(&seed_points)
        .into_iter()
        .map(|idx| {
            let members: Vec<_> = idx.iter().map(|&i| seed_points[i]).collect();
            component_moments(&members, sigma2_floor)
        })
        .collect();

    while seeds.len() > k_max {
        let (small, _) = seeds
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.mass.total_cmp(&b.1.mass))
            .unwrap();
        let s = seeds.remove(small);
        let (near, _) = seeds
            .iter()
            .enumerate()
            .map(|(i, c)| {
                (
                    i,
                    (c.mean.0 - s.mean.0).powi(2) + (c.mean.1 - s.mean.1).powi(2),
                )
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let t = seeds[near];
        let mass = t.mass + s.mass;
        let mean = (
            (t.mean.0 * t.mass + s.mean.0 * s.mass) / mass,
            (t.mean.1 * t.mass + s.mean.1 * s.mass) / mass,
        );
        // pooled second moments about the merged mean
        let pool = |v: f64, a: f64, ma: f64, vb: f64, b: f64, mb: f64, m: f64| {
            (ma * (v + (a - m).powi(2)) + mb * (vb + (b - m).powi(2))) / (ma + mb)
        };
        seeds[near] = GaussianComponent {
            mean,
            variance: (
                pool(
                    t.variance.0,
                    t.mean.0,
                    t.mass,
                    s.variance.0,
                    s.mean.0,
                    s.mass,
                    mean.0,
                ),
                pool(
                    t.variance.1,
                    t.mean.1,
                    t.mass,
                    s.variance.1,
                    s.mean.1,
                    s.mass,
                    mean.1,
                ),
            ),
            mass,
            member_count: t.member_count + s.member_count,
        };
    }

    let total_seed: f64 = seeds.iter().map(|c| c.mass).sum();
    let mut comps: Vec<EmComponent> = seeds
        .iter()
        .map(|c| EmComponent {
            weight: c.mass / total_seed,
            mean: c.mean,
            var: (
                c.variance.0.max(sigma2_floor),
                c.variance.1.max(sigma2_floor),
            ),
        })
        .collect();

    let n = points.len();
    let mut resp = vec![0.0; n * comps.len()];
    let mut prev_ll = f64::NEG_INFINITY;
    let mut logs = vec![0.0; comps.len()];
    for _ in 0..max_iterations {
        let k = comps.len();
        // E-step
        let mut ll = 0.0;
        for (i, p) in points.iter().enumerate() {
            for (j, c) in comps.iter().enumerate() {
                logs[j] = c.weight.ln() + c.log_density(p.x, p.y);
            }
            let lse = log_sum_exp(&logs[..k]);
            ll += p.probability * lse;
            for j in 0..k {
                resp[i * k + j] = (logs[j] - lse).exp();
            }
        }
        // M-step
        let mut next = Vec::with_capacity(k);
        let total: f64 = points.iter().map(|p| p.probability).sum();
        for j in 0..k {
            let nj: f64 = points
                .iter()
                .enumerate()
                .map(|(i, p)| p.probability * resp[i * k + j])
                .sum();
            if nj <= 1e-12 * total {
                continue;
            }
            let mx = points
                .iter()
                .enumerate()
                .map(|(i, p)| p.probability * resp[i * k + j] * p.x)
                .sum::<f64>()
                / nj;
            let my = points
                .iter()
                .enumerate()
                .map(|(i, p)| p.probability * resp[i * k + j] * p.y)
                .sum::<f64>()
                / nj;
            let vx = points
                .iter()
                .enumerate()
                .map(|(i, p)| p.probability * resp[i * k + j] * (p.x - mx).powi(2))
                .sum::<f64>()
                / nj;
            let vy = points
                .iter()
                .enumerate()
                .map(|(i, p)| p.probability * resp[i * k + j] * (p.y - my).powi(2))
                .sum::<f64>()
                / nj;
            next.push(EmComponent {
                weight: nj / total,
                mean: (mx, my),
                var: (vx.max(sigma2_floor), vy.max(sigma2_floor)),
            });
        }
        let dropped = next.len() != comps.len();
        comps = next;
        if dropped {
            resp = vec![0.0; n * comps.len()];
            prev_ll = f64::NEG_INFINITY;
            continue;
        }
        if (ll - prev_ll).abs() < tolerance {
            break;
        }
        prev_ll = ll;
    }

    let mut clusters: Vec<Vec<WeightedPoint>> = vec![Vec::new(); comps.len()];
    for p in points {
        let (best, _) = comps
            .iter()
            .enumerate()
            .map(|(j, c)| (j, c.weight.ln() + c.log_density(p.x, p.y)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        clusters[best].push(*p);
    }
    clusters.retain(|c| !c.is_empty());
    clusters
}

/// Per-axis variance of a 2-D Gaussian restricted to the region where it exceeds
/// `level` times its peak, relative to the untruncated variance. Clamped to `[0.1, 1]`.
pub fn truncated_variance_ratio(level: f64) -> f64 {
    if !(level > 0.0) {
        return 1.0;
    }
    if level >= 1.0 {
        return 0.1;
    }
    let a = -level.ln();
    (1.0 - a * level / (1.0 - level)).clamp(0.1, 1.0)
}

/// Threshold, cluster and summarize a response map. With `truncation_correction` each
/// cluster's moments are rescaled by [`truncated_variance_ratio`] of its cut level.
pub fn estimate_likelihood(map: &ResponseMap, cfg: &LikelihoodConfig) -> Result<LikelihoodMixture> {
    let th = threshold_map(map, cfg.tau_moments)?;
    let seed_abs = cfg.tau_seed * th.peak_value;
    let clusters = cluster_points_with(
        &th.points,
        cfg.k_max,
        seed_abs,
        cfg.sigma2_floor,
        cfg.em_tolerance,
        cfg.em_max_iterations,
    );
    let mut components: Vec<GaussianComponent> = clusters
        .iter()
        .map(|c| {
            let mut comp = component_moments(c, 0.0);
            if cfg.truncation_correction {
                let top = c.iter().map(|p| p.probability).fold(0.0, f64::max);
                let shrink = truncated_variance_ratio(th.tau_abs / top);
                comp.variance = (comp.variance.0 / shrink, comp.variance.1 / shrink);
            }
            comp.variance = (
                comp.variance.0.max(cfg.sigma2_floor),
                comp.variance.1.max(cfg.sigma2_floor),
            );
            comp
        })
        .collect();
    components.sort_by(|a, b| b.mass.total_cmp(&a.mass));
    Ok(LikelihoodMixture {
        components,
        tau: th.tau_abs,
        equal_weights: cfg.equal_weights,
    })
}

/// `sum_j w_j N(pos; mu_j, diag(sigma_j^2))`, floored at [`DENSITY_FLOOR`].
pub fn mixture_density(mix: &LikelihoodMixture, x: f64, y: f64) -> f64 {
    mix.weights()
        .iter()
        .zip(&mix.components)
        .map(|(w, c)| w * c.density(x, y))
        .sum::<f64>()
        .max(DENSITY_FLOOR)
}

/// Log of the unfloored mixture density. Stays finite far from every component.
pub fn mixture_log_density(mix: &LikelihoodMixture, x: f64, y: f64) -> f64 {
    let terms: Vec<f64> = mix
        .weights()
        .iter()
        .zip(&mix.components)
        .map(|(w, c)| w.ln() + c.log_density(x, y))
        .collect();
    log_sum_exp(&terms)
}
