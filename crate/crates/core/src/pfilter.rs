//! Particle filter driven by correlation responses.
//!
//! [`track_frame`] samples particles from the Gaussian-mixture likelihood fitted to the
//! response map at the predicted state, moves each particle to the peak of its own
//! response and weighs the moved particle by
//! `likelihood(x~) * transition(x~) / proposal(x~)`, every factor evaluated at the moved
//! location. [`track_frame_baseline`] is the classic variant: particles come from the
//! transition density and keep the likelihood of their unmoved location as weight.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corrfilter::{
    likelihood_value, respond, update_model, CorrelationModel, FilterConfig, ResponseScore,
};
use crate::error::{Error, Result};
use crate::features::{pyramid_at, sample_dense_features, ExtractorConfig, FeaturePyramid};
use crate::grid::{BoundingBox, ImageRaster};
use crate::likelihood::{
    estimate_likelihood, log_sum_exp, mixture_density, mixture_log_density, LikelihoodConfig,
    LikelihoodMixture, DENSITY_FLOOR,
};

pub const TRANSITION_FLOOR: f64 = 1e-12;

/// Position `(cx, cy, w, h)` and per-frame velocity of the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub position: [f64; 4],
    pub velocity: [f64; 4],
}

impl StateVector {
    pub fn at_rest(b: &BoundingBox) -> Self {
        Self {
            position: b.as_array(),
            velocity: [0.0; 4],
        }
    }

    pub fn bbox(&self) -> Result<BoundingBox> {
        BoundingBox::from_array(self.position)
    }

    pub fn as_vector(&self) -> [f64; 8] {
        let mut z = [0.0; 8];
        z[..4].copy_from_slice(&self.position);
        z[4..].copy_from_slice(&self.velocity);
        z
    }
}

/// First-order motion model with a diagonal Gaussian transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionModel {
    pub sigma: [f64; 4],
}

impl MotionModel {
    /// Transition spread proportional to the target size.
    pub fn for_size(w: f64, h: f64, position_ratio: f64, size_ratio: f64) -> Self {
        Self {
            sigma: [
                position_ratio * w,
                position_ratio * h,
                size_ratio * w,
                size_ratio * h,
            ],
        }
    }

    /// The 8x8 process matrix `[[I, I], [0, I]]`.
    pub fn matrix() -> [[f64; 8]; 8] {
        let mut a = [[0.0; 8]; 8];
        for i in 0..8 {
            a[i][i] = 1.0;
        }
        for i in 0..4 {
            a[i][i + 4] = 1.0;
        }
        a
    }
}

pub fn predict_state(prev: &StateVector) -> StateVector {
    let mut position = prev.position;
    for (p, v) in position.iter_mut().zip(&prev.velocity) {
        *p += v;
    }
    StateVector {
        position,
        velocity: prev.velocity,
    }
}

/// Product of per-axis Gaussians centered on the predicted position, floored.
pub fn transition_density(x: &[f64; 4], predicted: &StateVector, motion: &MotionModel) -> f64 {
    log_transition_density(x, predicted, motion)
        .exp()
        .max(TRANSITION_FLOOR)
}

fn log_normal(v: f64, mean: f64, s: f64) -> f64 {
    let e = (v - mean) / s;
    -0.5 * e * e - (s * (2.0 * std::f64::consts::PI).sqrt()).ln()
}

/// Log of the unfloored transition density.
pub fn log_transition_density(x: &[f64; 4], predicted: &StateVector, motion: &MotionModel) -> f64 {
    (0..4)
        .map(|i| log_normal(x[i], predicted.position[i], motion.sigma[i]))
        .sum()
}

/// Per-axis standard deviation of where a transition draw lands after the shift:
/// the transition spread plus a uniform landing spot inside a `padding`-sized window.
pub fn defensive_spread(predicted: &StateVector, motion: &MotionModel, padding: f64) -> (f64, f64) {
    let axis = |i: usize| {
        (motion.sigma[i].powi(2) + (padding * predicted.position[i + 2]).powi(2) / 12.0).sqrt()
    };
    (axis(0), axis(1))
}

fn log_defensive_density(x: f64, y: f64, predicted: &StateVector, spread: (f64, f64)) -> f64 {
    log_normal(x, predicted.position[0], spread.0) + log_normal(y, predicted.position[1], spread.1)
}

/// The three weight factors of a particle and the locations they were evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WeightFactors {
    pub likelihood: f64,
    pub transition: f64,
    pub proposal: f64,
    pub likelihood_at: (f64, f64),
    pub transition_at: [f64; 4],
    pub proposal_at: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub sampled: [f64; 4],
    pub shifted: [f64; 4],
    /// Mixture component the particle was drawn from, if any.
    pub component: Option<usize>,
    /// Response of the patch at the sampled location.
    pub sample_response: Option<ResponseScore>,
    /// Response used for the likelihood factor.
    pub response: Option<ResponseScore>,
    pub factors: WeightFactors,
    pub weight: f64,
    pub normalized: f64,
}

impl Particle {
    pub fn new(sampled: [f64; 4]) -> Self {
        Self {
            sampled,
            shifted: sampled,
            component: None,
            sample_response: None,
            response: None,
            factors: WeightFactors::default(),
            weight: 0.0,
            normalized: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    WeightedMean,
    MaxWeight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalKind {
    /// Sample from the response-map likelihood and weigh shifted particles.
    Likelihood,
    /// Sample from the transition density and keep pre-shift weights.
    Transition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfConfig {
    pub num_particles: usize,
    pub seed: u64,
    /// Variance floor of fitted components as a fraction of the target width, squared.
    pub sigma2_floor_ratio: f64,
    pub transition_position_ratio: f64,
    pub transition_size_ratio: f64,
    pub velocity_smoothing: f64,
    /// Track a velocity for `(w, h)` too. Off by default: the size velocity stays zero.
    pub size_velocity: bool,
    pub estimate_mode: EstimateMode,
    /// Recompute the response at the shifted location for the likelihood factor.
    pub recompute_at_shift: bool,
    /// Build the initial response at the motion-predicted state rather than the previous one.
    pub initial_at_predicted: bool,
    /// Components holding at least this mass fraction get at least this share of particles.
    pub stratified_floor: f64,
    /// Share of likelihood-proposal particles drawn from the transition density instead
    /// of the mixture. Weights use the combined density.
    pub defensive_fraction: f64,
    pub proposal: ProposalKind,
}

impl Default for PfConfig {
    fn default() -> Self {
        Self {
            num_particles: 100,
            seed: 0,
            sigma2_floor_ratio: 0.01,
            transition_position_ratio: 0.2,
            transition_size_ratio: 0.02,
            velocity_smoothing: 0.5,
            size_velocity: false,
            estimate_mode: EstimateMode::WeightedMean,
            recompute_at_shift: true,
            initial_at_predicted: true,
            stratified_floor: 0.1,
            defensive_fraction: 0.2,
            proposal: ProposalKind::Likelihood,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackerConfig {
    pub features: ExtractorConfig,
    pub filter: FilterConfig,
    pub likelihood: LikelihoodConfig,
    pub pf: PfConfig,
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        let pf = &self.pf;
        if pf.num_particles == 0 {
            return Err(Error::Config("num_particles must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.filter.learning_rate) {
            return Err(Error::Config("learning_rate must lie in [0, 1]".into()));
        }
        if !(self.filter.lambda > 0.0) || !(self.filter.label_sigma_factor > 0.0) {
            return Err(Error::Config(
                "lambda and label_sigma_factor must be positive".into(),
            ));
        }
        if !(pf.transition_position_ratio > 0.0 && pf.transition_size_ratio > 0.0) {
            return Err(Error::Config("transition ratios must be positive".into()));
        }
        if !(0.0..=1.0).contains(&pf.velocity_smoothing)
            || !(0.0..=1.0).contains(&pf.stratified_floor)
        {
            return Err(Error::Config(
                "velocity_smoothing and stratified_floor must lie in [0, 1]".into(),
            ));
        }
        if !(0.0..1.0).contains(&pf.defensive_fraction) {
            return Err(Error::Config(
                "defensive_fraction must lie in [0, 1)".into(),
            ));
        }
        if !(pf.sigma2_floor_ratio > 0.0) {
            return Err(Error::Config("sigma2_floor_ratio must be positive".into()));
        }
        let l = &self.likelihood;
        if !(0.0..1.0).contains(&l.tau_moments) || !(0.0..1.0).contains(&l.tau_seed) || l.k_max == 0
        {
            return Err(Error::Config(
                "thresholds must lie in [0, 1) and k_max >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Where per-window features come from.
#[derive(Debug, Clone)]
pub enum FeatureSource {
    /// Hand-crafted extraction from the frame pixels.
    Extracted(ExtractorConfig),
    /// Whole-frame feature maps loaded from an `FPYR` file, indexed by frame number.
    External {
        frames: Vec<(u32, FeaturePyramid)>,
        padding: f64,
        rows: usize,
        cols: usize,
    },
}

impl FeatureSource {
    pub fn pyramid(&self, frame: &Frame<'_>, target: &BoundingBox) -> Result<FeaturePyramid> {
        match self {
            FeatureSource::Extracted(cfg) => pyramid_at(frame.image, target, cfg),
            FeatureSource::External {
                frames,
                padding,
                rows,
                cols,
            } => {
                let dense = frames
                    .iter()
                    .find(|(i, _)| *i as usize == frame.index)
                    .map(|(_, p)| p)
                    .ok_or(Error::FrameNotFound(frame.index as u32))?;
                sample_dense_features(
                    dense,
                    (frame.image.width(), frame.image.height()),
                    target,
                    *padding,
                    *rows,
                    *cols,
                )
            }
        }
    }
}

/// A frame with its 0-based position in the sequence.
#[derive(Debug, Clone, Copy)]
pub struct Frame<'a> {
    pub image: &'a ImageRaster,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    /// Shifted supports with their normalized weights.
    pub particles: Vec<([f64; 4], f64)>,
    pub estimate: StateVector,
    /// Supports after systematic resampling (uniform weights).
    pub resampled: Vec<[f64; 4]>,
}

/// Per-frame diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub index: usize,
    pub estimate: BoundingBox,
    /// Number of likelihood components (0 when the mixture was not used).
    pub k: usize,
    /// Per-component standard deviations `(x, y)` in pixels.
    pub component_std: Vec<(f64, f64)>,
    /// Set when the weights degenerated or the initial map had no positive peak.
    pub quality_flag: bool,
    pub weight_sum: f64,
    pub effective_sample_size: f64,
    pub max_weight: f64,
    /// Every weight factor was evaluated at the particle's shifted support.
    pub support_verified: bool,
}

pub struct FrameOutcome {
    pub posterior: Posterior,
    pub model: CorrelationModel,
    pub report: FrameReport,
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn component_counts(
    weights: &[f64],
    n: usize,
    floor_frac: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let k = weights.len();
    let mut counts = vec![0usize; k];
    let floor = (floor_frac * n as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    let mut left = n;
    if floor_frac > 0.0 {
        for &j in &order {
            if weights[j] >= floor_frac {
                let c = floor.min(left);
                counts[j] = c;
                left -= c;
            }
        }
    }
    let total: f64 = weights.iter().sum();
    for _ in 0..left {
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = k - 1;
        for (j, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = j;
                break;
            }
        }
        counts[pick] += 1;
    }
    counts
}

/// Draws `n` particles from the mixture: centers from the chosen component, sizes from
/// the transition density around the predicted size.
pub fn sample_particles(
    mix: &LikelihoodMixture,
    predicted: &StateVector,
    motion: &MotionModel,
    n: usize,
    stratified_floor: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Particle> {
    let counts = component_counts(&mix.weights(), n, stratified_floor, rng);
    let mut particles = Vec::with_capacity(n);
    for (j, &count) in counts.iter().enumerate() {
        let c = &mix.components[j];
        let (sx, sy) = c.std_dev();
        for _ in 0..count {
            let cx = c.mean.0 + sx * standard_normal(rng);
            let cy = c.mean.1 + sy * standard_normal(rng);
            let w = (predicted.position[2] + motion.sigma[2] * standard_normal(rng)).max(1.0);
            let h = (predicted.position[3] + motion.sigma[3] * standard_normal(rng)).max(1.0);
            let mut p = Particle::new([cx, cy, w, h]);
            p.component = Some(j);
            particles.push(p);
        }
    }
    particles
}

/// Draws `n` particles from the transition density around the predicted state.
pub fn sample_from_transition(
    predicted: &StateVector,
    motion: &MotionModel,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Particle> {
    (0..n)
        .map(|_| {
            let mut s = [0.0; 4];
            for i in 0..4 {
                s[i] = predicted.position[i] + motion.sigma[i] * standard_normal(rng);
            }
            s[2] = s[2].max(1.0);
            s[3] = s[3].max(1.0);
            Particle::new(s)
        })
        .collect()
}

/// Moves the particle's center to the pixel position of its sample response peak.
pub fn shift_particle(mut p: Particle) -> Result<Particle> {
    let score = p
        .sample_response
        .as_ref()
        .ok_or_else(|| Error::InvalidMap("particle has no response".into()))?;
    let (x, y) = score.map.grid_to_image(score.peak_point)?;
    p.shifted = [x, y, p.sampled[2], p.sampled[3]];
    Ok(p)
}

fn window(s: &[f64; 4]) -> Result<BoundingBox> {
    BoundingBox::from_array(*s)
}

fn evaluate_particle(
    mut p: Particle,
    frame: &Frame<'_>,
    corr: &CorrelationModel,
    source: &FeatureSource,
    recompute: bool,
) -> Result<Particle> {
    let pyr = source.pyramid(frame, &window(&p.sampled)?)?;
    p.sample_response = Some(respond(corr, &pyr)?);
    let mut p = shift_particle(p)?;
    p.response = if recompute {
        let pyr = source.pyramid(frame, &window(&p.shifted)?)?;
        Some(respond(corr, &pyr)?)
    } else {
        p.sample_response.clone()
    };
    Ok(p)
}

/// Proposal density the particles were drawn from.
#[derive(Debug, Clone, Copy)]
pub enum Proposal<'a> {
    Mixture(&'a LikelihoodMixture),
    /// `fraction * N(predicted, spread) + (1 - fraction) * mixture`, over the center.
    Defensive {
        mixture: &'a LikelihoodMixture,
        fraction: f64,
        spread: (f64, f64),
    },
    Transition,
}

impl Proposal<'_> {
    pub fn density(&self, x: &[f64; 4], predicted: &StateVector, motion: &MotionModel) -> f64 {
        match *self {
            Proposal::Mixture(mix) => mixture_density(mix, x[0], x[1]),
            Proposal::Defensive { .. } => self
                .log_density(x, predicted, motion)
                .exp()
                .max(DENSITY_FLOOR),
            Proposal::Transition => transition_density(x, predicted, motion),
        }
    }

    /// Unfloored log density, used for the weights.
    pub fn log_density(&self, x: &[f64; 4], predicted: &StateVector, motion: &MotionModel) -> f64 {
        match *self {
            Proposal::Mixture(mix) => mixture_log_density(mix, x[0], x[1]),
            Proposal::Defensive {
                mixture,
                fraction,
                spread,
            } => log_sum_exp(&[
                fraction.ln() + log_defensive_density(x[0], x[1], predicted, spread),
                (1.0 - fraction).ln() + mixture_log_density(mixture, x[0], x[1]),
            ]),
            Proposal::Transition => log_transition_density(x, predicted, motion),
        }
    }
}

/// Normalizes weights in place. Returns `false` (and assigns uniform weights) when every
/// weight is zero or the sum is not finite.
pub fn normalize_weights(particles: &mut [Particle]) -> bool {
    let total: f64 = particles.iter().map(|p| p.weight).sum();
    if !(total > 0.0 && total.is_finite()) {
        let u = 1.0 / particles.len() as f64;
        particles.iter_mut().for_each(|p| p.normalized = u);
        return false;
    }
    particles
        .iter_mut()
        .for_each(|p| p.normalized = p.weight / total);
    true
}

/// Shifted-support weights: `likelihood(x~) * transition(x~) / proposal(x~)`.
/// Returns `false` if the weights degenerated and were replaced by uniform ones.
pub fn weigh_particles(
    particles: &mut [Particle],
    proposal: Proposal<'_>,
    predicted: &StateVector,
    motion: &MotionModel,
) -> bool {
    for p in particles.iter_mut() {
        let x = p.shifted;
        let (likelihood, likelihood_at) = match &p.response {
            Some(r) => (likelihood_value(r), r.anchor()),
            None => (0.0, (f64::NAN, f64::NAN)),
        };
        let log_transition = log_transition_density(&x, predicted, motion);
        let log_proposal = proposal.log_density(&x, predicted, motion);
        let transition = log_transition.exp();
        let proposal_density = log_proposal.exp();
        p.factors = WeightFactors {
            likelihood,
            transition,
            proposal: proposal_density,
            likelihood_at,
            transition_at: x,
            proposal_at: (x[0], x[1]),
        };
        // The ratio is taken in log space: with floored densities, far particles get
        // floor / floor and outweigh everything near the prediction.
        p.weight = likelihood * (log_transition - log_proposal).exp();
    }
    normalize_weights(particles)
}

/// Classic weights: the likelihood of the unshifted sample.
pub fn weigh_particles_baseline(particles: &mut [Particle]) -> bool {
    for p in particles.iter_mut() {
        let likelihood = p
            .sample_response
            .as_ref()
            .map(likelihood_value)
            .unwrap_or(0.0);
        p.factors = WeightFactors {
            likelihood,
            transition: 1.0,
            proposal: 1.0,
            likelihood_at: (p.sampled[0], p.sampled[1]),
            transition_at: p.sampled,
            proposal_at: (p.sampled[0], p.sampled[1]),
        };
        p.weight = likelihood;
    }
    normalize_weights(particles)
}

/// True when every factor of every particle was evaluated at its shifted support.
pub fn support_verified(particles: &[Particle]) -> bool {
    const TOL: f64 = 1e-9;
    particles.iter().all(|p| {
        let f = &p.factors;
        let x = p.shifted;
        (f.likelihood_at.0 - x[0]).abs() < TOL
            && (f.likelihood_at.1 - x[1]).abs() < TOL
            && (f.proposal_at.0 - x[0]).abs() < TOL
            && (f.proposal_at.1 - x[1]).abs() < TOL
            && f.transition_at == x
    })
}

/// Point estimate over the shifted supports plus smoothed velocity.
pub fn estimate_posterior(
    particles: &[Particle],
    prev: &StateVector,
    mode: EstimateMode,
    velocity_smoothing: f64,
    size_velocity: bool,
) -> Posterior {
    let mut position = [0.0; 4];
    match mode {
        EstimateMode::WeightedMean => {
            for p in particles {
                for i in 0..4 {
                    position[i] += p.normalized * p.shifted[i];
                }
            }
        }
        EstimateMode::MaxWeight => {
            let best = particles
                .iter()
                .max_by(|a, b| a.normalized.total_cmp(&b.normalized))
                .expect("at least one particle");
            position = best.shifted;
        }
    }
    let mut velocity = [0.0; 4];
    let axes = if size_velocity { 4 } else { 2 };
    for i in 0..axes {
        velocity[i] = velocity_smoothing * (position[i] - prev.position[i])
            + (1.0 - velocity_smoothing) * prev.velocity[i];
    }
    Posterior {
        particles: particles
            .iter()
            .map(|p| (p.shifted, p.normalized))
            .collect(),
        estimate: StateVector { position, velocity },
        resampled: Vec::new(),
    }
}

/// Systematic resampling: offspring indices for `n` draws with one uniform offset `u0`
/// in `[0, 1)`.
pub fn systematic_indices(weights: &[f64], n: usize, u0: f64) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(n);
    let mut acc = weights[0] / total;
    let mut j = 0;
    for i in 0..n {
        let u = (i as f64 + u0) / n as f64;
        while u >= acc && j + 1 < weights.len() {
            j += 1;
            acc += weights[j] / total;
        }
        out.push(j);
    }
    out
}

/// Systematic resampling to the same particle count with uniform weights.
pub fn resample(particles: &[Particle], rng: &mut ChaCha8Rng) -> Vec<Particle> {
    let weights: Vec<f64> = particles.iter().map(|p| p.normalized).collect();
    let u0: f64 = rng.random();
    let n = particles.len();
    systematic_indices(&weights, n, u0)
        .into_iter()
        .map(|i| {
            let mut p = particles[i].clone();
            p.normalized = 1.0 / n as f64;
            p
        })
        .collect()
}

fn effective_sample_size(particles: &[Particle]) -> f64 {
    1.0 / particles
        .iter()
        .map(|p| p.normalized * p.normalized)
        .sum::<f64>()
}

fn finish_frame(
    frame: &Frame<'_>,
    mut particles: Vec<Particle>,
    prev: &StateVector,
    corr: &CorrelationModel,
    source: &FeatureSource,
    cfg: &TrackerConfig,
    rng: &mut ChaCha8Rng,
    mut report: FrameReport,
) -> Result<FrameOutcome> {
    let mut posterior = estimate_posterior(
        &particles,
        prev,
        cfg.pf.estimate_mode,
        cfg.pf.velocity_smoothing,
        cfg.pf.size_velocity,
    );
    let estimate = posterior.estimate.bbox()?;
    report.estimate = estimate;
    report.weight_sum = particles.iter().map(|p| p.normalized).sum();
    report.effective_sample_size = effective_sample_size(&particles);
    report.max_weight = particles.iter().map(|p| p.normalized).fold(0.0, f64::max);
    particles = resample(&particles, rng);
    posterior.resampled = particles.iter().map(|p| p.shifted).collect();
    let pyr = source.pyramid(frame, &estimate)?;
    let model = update_model(corr, &pyr, cfg.filter.learning_rate)?;
    Ok(FrameOutcome {
        posterior,
        model,
        report,
    })
}

fn empty_report(index: usize, prev: &StateVector) -> Result<FrameReport> {
    Ok(FrameReport {
        index,
        estimate: prev.bbox()?,
        k: 0,
        component_std: Vec::new(),
        quality_flag: false,
        weight_sum: 0.0,
        effective_sample_size: 0.0,
        max_weight: 0.0,
        support_verified: false,
    })
}

/// One step of the likelihood-proposal tracker.
pub fn track_frame(
    frame: &Frame<'_>,
    prev: &StateVector,
    corr: &CorrelationModel,
    source: &FeatureSource,
    cfg: &TrackerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<FrameOutcome> {
    let mut run = || -> Result<FrameOutcome> {
        let predicted = predict_state(prev);
        let motion = MotionModel::for_size(
            predicted.position[2],
            predicted.position[3],
            cfg.pf.transition_position_ratio,
            cfg.pf.transition_size_ratio,
        );
        let anchor = if cfg.pf.initial_at_predicted {
            &predicted
        } else {
            prev
        };
        let initial = respond(corr, &source.pyramid(frame, &anchor.bbox()?)?)?;
        let mut lcfg = cfg.likelihood;
        lcfg.sigma2_floor = (cfg.pf.sigma2_floor_ratio * predicted.position[2]).powi(2);
        let mut report = empty_report(frame.index, prev)?;
        let n = cfg.pf.num_particles;

        let mixture = match estimate_likelihood(&initial.map, &lcfg) {
            Ok(mix) => Some(mix),
            Err(Error::DegenerateMap { .. }) => None,
            Err(e) => return Err(e),
        };
        let sampled = match &mixture {
            Some(mix) => {
                report.k = mix.k();
                report.component_std = mix.components.iter().map(|c| c.std_dev()).collect();
                let defensive = (cfg.pf.defensive_fraction * n as f64).round() as usize;
                let mut ps = sample_particles(
                    mix,
                    &predicted,
                    &motion,
                    n - defensive,
                    cfg.pf.stratified_floor,
                    rng,
                );
                ps.extend(sample_from_transition(&predicted, &motion, defensive, rng));
                ps
            }
            None => {
                report.quality_flag = true;
                sample_from_transition(&predicted, &motion, n, rng)
            }
        };
        let mut particles = sampled
            .into_iter()
            .map(|p| evaluate_particle(p, frame, corr, source, cfg.pf.recompute_at_shift))
            .collect::<Result<Vec<_>>>()?;
        let proposal = match &mixture {
            Some(mix) if cfg.pf.defensive_fraction > 0.0 => Proposal::Defensive {
                mixture: mix,
                fraction: cfg.pf.defensive_fraction,
                spread: defensive_spread(&predicted, &motion, cfg.features.padding),
            },
            Some(mix) => Proposal::Mixture(mix),
            None => Proposal::Transition,
        };
        if !weigh_particles(&mut particles, proposal, &predicted, &motion) {
            report.quality_flag = true;
        }
        report.support_verified = support_verified(&particles);
        finish_frame(frame, particles, prev, corr, source, cfg, rng, report)
    };
    run().map_err(|e| e.at_frame(frame.index))
}

/// One step of the transition-proposal baseline with pre-shift weights.
pub fn track_frame_baseline(
    frame: &Frame<'_>,
    prev: &StateVector,
    corr: &CorrelationModel,
    source: &FeatureSource,
    cfg: &TrackerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<FrameOutcome> {
    let mut run = || -> Result<FrameOutcome> {
        let predicted = predict_state(prev);
        let motion = MotionModel::for_size(
            predicted.position[2],
            predicted.position[3],
            cfg.pf.transition_position_ratio,
            cfg.pf.transition_size_ratio,
        );
        let mut report = empty_report(frame.index, prev)?;
        let sampled = sample_from_transition(&predicted, &motion, cfg.pf.num_particles, rng);
        let mut particles = sampled
            .into_iter()
            .map(|p| evaluate_particle(p, frame, corr, source, false))
            .collect::<Result<Vec<_>>>()?;
        if !weigh_particles_baseline(&mut particles) {
            report.quality_flag = true;
        }
        finish_frame(frame, particles, prev, corr, source, cfg, rng, report)
    };
    run().map_err(|e| e.at_frame(frame.index))
}

/// Stateful wrapper running either tracker over consecutive frames.
pub struct Tracker {
    cfg: TrackerConfig,
    source: FeatureSource,
    state: StateVector,
    model: CorrelationModel,
    rng: ChaCha8Rng,
    next_index: usize,
}

impl Tracker {
    /// Trains the filter on the first frame at `init`; the returned report echoes `init`.
    pub fn new(
        first: &ImageRaster,
        init: BoundingBox,
        cfg: TrackerConfig,
        source: FeatureSource,
    ) -> Result<(Self, FrameReport)> {
        use rand::SeedableRng;
        cfg.validate()?;
        init.validate()?;
        let frame = Frame {
            image: first,
            index: 0,
        };
        let pyr = source.pyramid(&frame, &init).map_err(|e| e.at_frame(0))?;
        let model = crate::corrfilter::train_model(&pyr, &cfg.filter);
        let state = StateVector::at_rest(&init);
        let report = FrameReport {
            index: 0,
            estimate: init,
            k: 0,
            component_std: Vec::new(),
            quality_flag: false,
            weight_sum: 1.0,
            effective_sample_size: 1.0,
            max_weight: 1.0,
            support_verified: true,
        };
        let rng = ChaCha8Rng::seed_from_u64(cfg.pf.seed);
        Ok((
            Self {
                cfg,
                source,
                state,
                model,
                rng,
                next_index: 1,
            },
            report,
        ))
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn model(&self) -> &CorrelationModel {
        &self.model
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn step(&mut self, image: &ImageRaster) -> Result<(FrameReport, Posterior)> {
        let frame = Frame {
            image,
            index: self.next_index,
        };
        let outcome = match self.cfg.pf.proposal {
            ProposalKind::Likelihood => track_frame(
                &frame,
                &self.state,
                &self.model,
                &self.source,
                &self.cfg,
                &mut self.rng,
            )?,
            ProposalKind::Transition => track_frame_baseline(
                &frame,
                &self.state,
                &self.model,
                &self.source,
                &self.cfg,
                &mut self.rng,
            )?,
        };
        self.state = outcome.posterior.estimate;
        self.model = outcome.model;
        self.next_index += 1;
        Ok((outcome.report, outcome.posterior))
    }
}

/// Runs a tracker over all frames, initialized from `init` on the first.
pub fn run_tracker(
    frames: &[ImageRaster],
    init: BoundingBox,
    cfg: &TrackerConfig,
    source: &FeatureSource,
) -> Result<Vec<FrameReport>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::CountMismatch("no frames to track".into()))?;
    let (mut tracker, report) = Tracker::new(first, init, cfg.clone(), source.clone())?;
    let mut reports = vec![report];
    for image in &frames[1..] {
        reports.push(tracker.step(image)?.0);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ResponseMap;
    use crate::likelihood::GaussianComponent;
    use rand::SeedableRng;

    fn mixture(components: Vec<((f64, f64), (f64, f64), f64)>) -> LikelihoodMixture {
        LikelihoodMixture {
            components: components
                .into_iter()
                .map(|(mean, variance, mass)| GaussianComponent {
                    mean,
                    variance,
                    mass,
                    member_count: 1,
                })
                .collect(),
            tau: 0.0,
            equal_weights: false,
        }
    }

    fn state(p: [f64; 4], v: [f64; 4]) -> StateVector {
        StateVector {
            position: p,
            velocity: v,
        }
    }

    #[test]
    fn predict_examples() {
        let s = state([10.0, 10.0, 20.0, 40.0], [1.0, -2.0, 0.0, 0.0]);
        assert_eq!(predict_state(&s).position, [11.0, 8.0, 20.0, 40.0]);
        let s = state([3.0, 4.0, 5.0, 6.0], [0.0; 4]);
        assert_eq!(predict_state(&s).position, s.position);
    }

    #[test]
    fn predict_matches_dense_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = MotionModel::matrix();
        for _ in 0..100 {
            let mut z = [0.0; 8];
            z.iter_mut()
                .for_each(|v| *v = rng.random_range(-50.0..50.0));
            let s = state(z[..4].try_into().unwrap(), z[4..].try_into().unwrap());
            let mut want = [0.0; 8];
            for i in 0..8 {
                want[i] = (0..8).map(|j| a[i][j] * z[j]).sum();
            }
            assert_eq!(predict_state(&s).as_vector(), want);
        }
    }

    #[test]
    fn transition_density_examples() {
        let motion = MotionModel {
            sigma: [2.0, 3.0, 0.5, 0.25],
        };
        let pred = state([10.0, 20.0, 30.0, 40.0], [0.0; 4]);
        let at_mean = transition_density(&pred.position, &pred, &motion);
        let want: f64 = motion
            .sigma
            .iter()
            .map(|s| 1.0 / (2.0 * std::f64::consts::PI * s * s).sqrt())
            .product();
        assert!((at_mean - want).abs() < 1e-15);
        let far = [10.0 + 40.0, 20.0 + 60.0, 30.0, 40.0];
        assert_eq!(transition_density(&far, &pred, &motion), TRANSITION_FLOOR);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x: [f64; 4] = std::array::from_fn(|i| {
                pred.position[i] + rng.random_range(-2.0..2.0) * motion.sigma[i]
            });
            let direct: f64 = (0..4)
                .map(|i| {
                    let z = (x[i] - pred.position[i]) / motion.sigma[i];
                    (-z * z / 2.0).exp() / (motion.sigma[i] * (2.0 * std::f64::consts::PI).sqrt())
                })
                .product();
            assert!(
                (transition_density(&x, &pred, &motion) - direct.max(TRANSITION_FLOOR)).abs()
                    < 1e-15
            );
        }
    }

    #[test]
    fn sampling_concentrates_on_tight_component() {
        let mix = mixture(vec![((50.0, 60.0), (0.01, 0.01), 1.0)]);
        let pred = state([50.0, 60.0, 20.0, 20.0], [0.0; 4]);
        let motion = MotionModel::for_size(20.0, 20.0, 0.2, 0.02);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ps = sample_particles(&mix, &pred, &motion, 500, 0.1, &mut rng);
        assert_eq!(ps.len(), 500);
        assert!(ps
            .iter()
            .all(|p| (p.sampled[0] - 50.0).abs() < 0.8 && (p.sampled[1] - 60.0).abs() < 0.8));
    }

    // Binomial oracle: with equal masses each component gets 100 floor particles plus
    // Binomial(800, 1/2) of the remainder.
    #[test]
    fn sampling_splits_by_mass() {
        let mix = mixture(vec![
            ((0.0, 0.0), (1.0, 1.0), 0.5),
            ((100.0, 0.0), (1.0, 1.0), 0.5),
        ]);
        let pred = state([50.0, 0.0, 20.0, 20.0], [0.0; 4]);
        let motion = MotionModel::for_size(20.0, 20.0, 0.2, 0.02);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ps = sample_particles(&mix, &pred, &motion, 1000, 0.1, &mut rng);
            let first = ps.iter().filter(|p| p.component == Some(0)).count() as f64;
            assert!((first - 500.0).abs() <= 3.0 * (1000.0f64 * 0.25).sqrt());
        }
    }

    #[test]
    fn stratified_floor_protects_small_components() {
        let weights = [0.85, 0.15];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let c = component_counts(&weights, 100, 0.1, &mut rng);
            assert_eq!(c.iter().sum::<usize>(), 100);
            assert!(c[1] >= 10);
        }
        let c = component_counts(&[0.5, 0.5], 1, 0.1, &mut rng);
        assert_eq!(c.iter().sum::<usize>(), 1);
    }

    #[test]
    fn sampling_is_deterministic() {
        let mix = mixture(vec![
            ((5.0, 5.0), (4.0, 4.0), 0.7),
            ((25.0, 5.0), (4.0, 4.0), 0.3),
        ]);
        let pred = state([10.0, 5.0, 20.0, 20.0], [0.0; 4]);
        let motion = MotionModel::for_size(20.0, 20.0, 0.2, 0.02);
        let a = sample_particles(
            &mix,
            &pred,
            &motion,
            100,
            0.1,
            &mut ChaCha8Rng::seed_from_u64(9),
        );
        let b = sample_particles(
            &mix,
            &pred,
            &motion,
            100,
            0.1,
            &mut ChaCha8Rng::seed_from_u64(9),
        );
        assert_eq!(a, b);
    }

    fn particle_with_peak(
        sampled: [f64; 4],
        rows: usize,
        cols: usize,
        peak: (usize, usize),
        cell: f64,
    ) -> Particle {
        let mut s = vec![0.0; rows * cols];
        s[peak.0 * cols + peak.1] = 1.0;
        let origin = (
            sampled[0] - (cols / 2) as f64 * cell,
            sampled[1] - (rows / 2) as f64 * cell,
        );
        let map = ResponseMap::new(rows, cols, s, origin, (cell, cell)).unwrap();
        let mut p = Particle::new(sampled);
        p.sample_response = Some(ResponseScore::from_map(map));
        p
    }

    #[test]
    fn shift_examples() {
        let p = shift_particle(particle_with_peak(
            [40.0, 30.0, 10.0, 10.0],
            8,
            8,
            (4, 4),
            1.5,
        ))
        .unwrap();
        assert_eq!(p.shifted, p.sampled);
        let p = shift_particle(particle_with_peak(
            [40.0, 30.0, 10.0, 12.0],
            8,
            8,
            (4, 7),
            1.5,
        ))
        .unwrap();
        assert_eq!(p.shifted, [44.5, 30.0, 10.0, 12.0]);
    }

    #[test]
    fn shift_matches_exhaustive_peak() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..30 {
            let scores: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
            let map = ResponseMap::new(10, 10, scores.clone(), (3.0, -2.0), (0.7, 1.3)).unwrap();
            let mut p = Particle::new([6.5, 4.5, 8.0, 8.0]);
            p.sample_response = Some(ResponseScore::from_map(map));
            let p = shift_particle(p).unwrap();
            let best = (0..100)
                .max_by(|&a, &b| scores[a].total_cmp(&scores[b]))
                .unwrap();
            let (m, q) = (best / 10, best % 10);
            assert!((p.shifted[0] - (3.0 + 0.7 * q as f64)).abs() < 1e-12);
            assert!((p.shifted[1] - (-2.0 + 1.3 * m as f64)).abs() < 1e-12);
        }
    }

    fn weighed_particle(shifted: [f64; 4], likelihood: f64) -> Particle {
        let rows = 4;
        let map = ResponseMap::new(
            rows,
            rows,
            vec![likelihood; rows * rows],
            (shifted[0] - 2.0, shifted[1] - 2.0),
            (1.0, 1.0),
        )
        .unwrap();
        let mut p = Particle::new(shifted);
        p.response = Some(ResponseScore::from_map(map));
        p
    }

    #[test]
    fn weights_follow_inverse_proposal() {
        let mix = mixture(vec![((0.0, 0.0), (4.0, 4.0), 1.0)]);
        let pred = state([1.0, 0.0, 10.0, 10.0], [0.0; 4]);
        let motion = MotionModel {
            sigma: [2.0, 2.0, 0.2, 0.2],
        };
        // same transition density (symmetric about the prediction), different proposal
        let mut ps = vec![
            weighed_particle([0.0, 0.0, 10.0, 10.0], 0.5),
            weighed_particle([2.0, 0.0, 10.0, 10.0], 0.5),
        ];
        assert!(weigh_particles(
            &mut ps,
            Proposal::Mixture(&mix),
            &pred,
            &motion
        ));
        let q0 = mixture_density(&mix, 0.0, 0.0);
        let q1 = mixture_density(&mix, 2.0, 0.0);
        assert!((ps[0].normalized / ps[1].normalized - q1 / q0).abs() < 1e-12);
        assert!(support_verified(&ps));
    }

    #[test]
    fn defensive_far_landing_is_penalized() {
        let mix = mixture(vec![((40.0, 50.0), (11.0, 11.0), 1.0)]);
        let pred = state([40.0, 50.0, 24.0, 24.0], [0.0; 4]);
        let motion = MotionModel::for_size(24.0, 24.0, 0.2, 0.02);
        let spread = defensive_spread(&pred, &motion, 1.8);
        let want = (4.8f64.powi(2) + (1.8f64 * 24.0).powi(2) / 12.0).sqrt();
        assert!((spread.0 - want).abs() < 1e-12 && (spread.1 - want).abs() < 1e-12);
        // a window far off the prediction with a stronger response must not win
        let mut ps = vec![
            weighed_particle([40.5, 50.0, 24.0, 24.0], 0.05),
            weighed_particle([15.0, 75.0, 24.0, 24.0], 0.6),
        ];
        let proposal = Proposal::Defensive {
            mixture: &mix,
            fraction: 0.2,
            spread,
        };
        assert!(weigh_particles(&mut ps, proposal, &pred, &motion));
        assert!(ps[1].normalized < 1e-3);
        assert!(support_verified(&ps));
        let q = proposal.density(&ps[0].shifted, &pred, &motion);
        let direct = 0.2 * (-0.5 * (0.5f64 / want).powi(2)).exp()
            / (2.0 * std::f64::consts::PI * want * want)
            + 0.8 * mixture_density(&mix, 40.5, 50.0);
        assert!((q - direct).abs() < 1e-15);
    }

    #[test]
    fn equal_weights_normalize_uniformly() {
        let mut ps: Vec<Particle> = (0..7)
            .map(|_| Particle {
                weight: 2.5,
                ..Particle::new([0.0, 0.0, 1.0, 1.0])
            })
            .collect();
        assert!(normalize_weights(&mut ps));
        assert!(ps.iter().all(|p| (p.normalized - 1.0 / 7.0).abs() < 1e-15));
        ps.iter_mut().for_each(|p| p.weight = 0.0);
        assert!(!normalize_weights(&mut ps));
        assert!(ps.iter().all(|p| (p.normalized - 1.0 / 7.0).abs() < 1e-15));
    }

    #[test]
    fn weights_match_factor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mix = mixture(vec![
            ((10.0, 10.0), (9.0, 4.0), 2.0),
            ((20.0, 12.0), (1.0, 1.0), 1.0),
        ]);
        let pred = state([12.0, 11.0, 16.0, 16.0], [0.0; 4]);
        let motion = MotionModel::for_size(16.0, 16.0, 0.2, 0.02);
        let mut ps: Vec<Particle> = (0..40)
            .map(|_| {
                let x = [
                    rng.random_range(5.0..25.0),
                    rng.random_range(5.0..18.0),
                    16.0 + rng.random_range(-0.5..0.5),
                    16.0,
                ];
                weighed_particle(x, rng.random_range(0.0..1.0))
            })
            .collect();
        weigh_particles(&mut ps, Proposal::Mixture(&mix), &pred, &motion);
        let raw: Vec<f64> = ps
            .iter()
            .map(|p| {
                let lik = p.response.as_ref().unwrap().mean_value.max(0.0);
                let mut t = 1.0;
                for i in 0..4 {
                    let z = (p.shifted[i] - pred.position[i]) / motion.sigma[i];
                    t *= (-z * z / 2.0).exp()
                        / (motion.sigma[i] * (2.0 * std::f64::consts::PI).sqrt());
                }
                let ws = [2.0 / 3.0, 1.0 / 3.0];
                let q: f64 = mix
                    .components
                    .iter()
                    .zip(ws)
                    .map(|(c, w)| {
                        let e = (p.shifted[0] - c.mean.0).powi(2) / c.variance.0
                            + (p.shifted[1] - c.mean.1).powi(2) / c.variance.1;
                        w * (-e / 2.0).exp()
                            / (2.0 * std::f64::consts::PI * (c.variance.0 * c.variance.1).sqrt())
                    })
                    .sum();
                lik * t / q
            })
            .collect();
        let total: f64 = raw.iter().sum();
        for (p, r) in ps.iter().zip(&raw) {
            assert!((p.normalized - r / total).abs() < 1e-12);
        }
        assert!((ps.iter().map(|p| p.normalized).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weight_scaling_leaves_posterior_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut ps: Vec<Particle> = (0..20)
            .map(|_| Particle {
                weight: rng.random_range(0.0..3.0),
                ..Particle::new([
                    rng.random_range(0.0..50.0),
                    rng.random_range(0.0..50.0),
                    10.0,
                    10.0,
                ])
            })
            .collect();
        let mut scaled: Vec<Particle> = ps
            .iter()
            .map(|p| Particle {
                weight: p.weight * 1e5,
                ..p.clone()
            })
            .collect();
        normalize_weights(&mut ps);
        normalize_weights(&mut scaled);
        let prev = state([25.0, 25.0, 10.0, 10.0], [0.0; 4]);
        let a = estimate_posterior(&ps, &prev, EstimateMode::WeightedMean, 0.5, true);
        let b = estimate_posterior(&scaled, &prev, EstimateMode::WeightedMean, 0.5, true);
        for i in 0..4 {
            assert!((a.estimate.position[i] - b.estimate.position[i]).abs() < 1e-9);
        }
        let wa: Vec<f64> = ps.iter().map(|p| p.normalized).collect();
        let wb: Vec<f64> = scaled.iter().map(|p| p.normalized).collect();
        assert_eq!(
            systematic_indices(&wa, 20, 0.37),
            systematic_indices(&wb, 20, 0.37)
        );
    }

    #[test]
    fn posterior_examples() {
        let prev = state([0.0, 0.0, 10.0, 10.0], [0.0; 4]);
        let one = vec![Particle {
            normalized: 1.0,
            ..Particle::new([3.0, 4.0, 10.0, 10.0])
        }];
        assert_eq!(
            estimate_posterior(&one, &prev, EstimateMode::WeightedMean, 0.5, true)
                .estimate
                .position,
            [3.0, 4.0, 10.0, 10.0]
        );
        let two = vec![
            Particle {
                normalized: 0.5,
                ..Particle::new([0.0, 0.0, 10.0, 10.0])
            },
            Particle {
                normalized: 0.5,
                ..Particle::new([10.0, 0.0, 10.0, 10.0])
            },
        ];
        let post = estimate_posterior(&two, &prev, EstimateMode::WeightedMean, 0.5, true);
        assert_eq!(post.estimate.position, [5.0, 0.0, 10.0, 10.0]);
        assert_eq!(post.estimate.velocity, [2.5, 0.0, 0.0, 0.0]);
        let mode = estimate_posterior(
            &[
                Particle {
                    normalized: 0.3,
                    ..two[0].clone()
                },
                Particle {
                    normalized: 0.7,
                    ..two[1].clone()
                },
            ],
            &prev,
            EstimateMode::MaxWeight,
            0.5,
            true,
        );
        assert_eq!(mode.estimate.position[0], 10.0);
    }

    #[test]
    fn posterior_matches_weighted_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut ps: Vec<Particle> = (0..25)
            .map(|_| Particle {
                weight: rng.random_range(0.0..1.0),
                ..Particle::new(std::array::from_fn(|_| rng.random_range(1.0..100.0)))
            })
            .collect();
        normalize_weights(&mut ps);
        let prev = state([50.0; 4], [1.0; 4]);
        let post = estimate_posterior(&ps, &prev, EstimateMode::WeightedMean, 0.5, true);
        for i in 0..4 {
            let mut acc = 0.0;
            for p in &ps {
                acc += p.normalized * p.shifted[i];
            }
            assert!((post.estimate.position[i] - acc).abs() < 1e-9);
            let v = 0.5 * (acc - 50.0) + 0.5;
            assert!((post.estimate.velocity[i] - v).abs() < 1e-9);
        }
    }

    #[test]
    fn resample_uniform_and_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ps: Vec<Particle> = (0..10)
            .map(|i| Particle {
                normalized: 0.1,
                ..Particle::new([i as f64, 0.0, 1.0, 1.0])
            })
            .collect();
        let r = resample(&ps, &mut rng);
        assert_eq!(r.len(), 10);
        let mut xs: Vec<f64> = r.iter().map(|p| p.sampled[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, (0..10).map(|i| i as f64).collect::<Vec<_>>());

        let mut ps = ps;
        ps.iter_mut().for_each(|p| p.normalized = 0.0);
        ps[3].normalized = 1.0;
        let r = resample(&ps, &mut rng);
        assert!(r
            .iter()
            .all(|p| p.sampled[0] == 3.0 && (p.normalized - 0.1).abs() < 1e-15));
    }

    // Systematic resampling puts floor(N w) or ceil(N w) offspring on each particle.
    #[test]
    fn resample_count_bound() {
        let w = [0.7, 0.2, 0.1];
        for k in 0..50 {
            let u0 = k as f64 / 50.0;
            let idx = systematic_indices(&w, 1000, u0);
            for (j, wj) in w.iter().enumerate() {
                let c = idx.iter().filter(|&&i| i == j).count() as f64;
                assert!((c - 1000.0 * wj).abs() <= 1.0, "{j}: {c}");
            }
        }
    }
}
