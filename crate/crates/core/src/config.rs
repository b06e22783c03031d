//! Flat `key=value` configuration files.
//!
//! Every tunable of the tracker and the evaluation has a key; omitted keys keep their
//! defaults and unknown keys are rejected. `#` starts a comment.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::{read_feature_file, ExtractorKind, LayerSpec};
use crate::pfilter::{EstimateMode, FeatureSource, ProposalKind, TrackerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tracker: TrackerConfig,
    /// Exclude the (given) first frame from OPE curves.
    pub skip_first_frame: bool,
    /// Whole-frame feature maps to sample instead of extracting features from pixels.
    pub external_features: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tracker: TrackerConfig::default(),
            skip_first_frame: true,
            external_features: None,
        }
    }
}

fn layer_text(l: &LayerSpec) -> String {
    match l.kind {
        ExtractorKind::Grayscale => format!("grayscale:{}:{}", l.cell_size, l.weight),
        ExtractorKind::GradientOrientation => {
            format!(
                "gradient:{}:{}:{}",
                l.cell_size, l.orientation_bins, l.weight
            )
        }
    }
}

fn parse_layers(v: &str) -> Option<Vec<LayerSpec>> {
    v.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split(':').collect();
            match parts.as_slice() {
                ["grayscale", cell, w] => {
                    Some(LayerSpec::grayscale(cell.parse().ok()?, w.parse().ok()?))
                }
                ["gradient", cell, bins, w] => Some(LayerSpec::gradient(
                    cell.parse().ok()?,
                    bins.parse().ok()?,
                    w.parse().ok()?,
                )),
                _ => None,
            }
        })
        .collect()
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        cfg.tracker.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Sets one key. The error message names the key and the offending value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse()
                .map_err(|_| format!("invalid value {v:?} for {key}"))
        }
        let t = &mut self.tracker;
        match key {
            "features.layers" => {
                t.features.layers = parse_layers(value)
                    .ok_or_else(|| format!("invalid value {value:?} for {key}"))?
            }
            "features.padding" => t.features.padding = num(key, value)?,
            "features.rows" => t.features.feature_rows = num(key, value)?,
            "features.cols" => t.features.feature_cols = num(key, value)?,
            "features.external" => {
                self.external_features = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "filter.label_sigma_factor" => t.filter.label_sigma_factor = num(key, value)?,
            "filter.lambda" => t.filter.lambda = num(key, value)?,
            "filter.learning_rate" => t.filter.learning_rate = num(key, value)?,
            "likelihood.tau_rel" => t.likelihood.tau_moments = num(key, value)?,
            "likelihood.tau_seed" => t.likelihood.tau_seed = num(key, value)?,
            "likelihood.k_max" => t.likelihood.k_max = num(key, value)?,
            "likelihood.equal_weights" => {
                t.likelihood.equal_weights =
                    parse_bool(value).ok_or_else(|| format!("invalid value {value:?} for {key}"))?
            }
            "likelihood.em_tolerance" => t.likelihood.em_tolerance = num(key, value)?,
            "likelihood.em_max_iterations" => t.likelihood.em_max_iterations = num(key, value)?,
            "likelihood.truncation_correction" => {
                t.likelihood.truncation_correction =
                    parse_bool(value).ok_or_else(|| format!("invalid value {value:?} for {key}"))?
            }
            "pf.num_particles" => t.pf.num_particles = num(key, value)?,
            "pf.seed" => t.pf.seed = num(key, value)?,
            "pf.sigma2_floor_ratio" => t.pf.sigma2_floor_ratio = num(key, value)?,
            "pf.transition_position_ratio" => t.pf.transition_position_ratio = num(key, value)?,
            "pf.transition_size_ratio" => t.pf.transition_size_ratio = num(key, value)?,
            "pf.velocity_smoothing" => t.pf.velocity_smoothing = num(key, value)?,
            "pf.stratified_floor" => t.pf.stratified_floor = num(key, value)?,
            "pf.defensive_fraction" => t.pf.defensive_fraction = num(key, value)?,
            "pf.size_velocity" => {
                t.pf.size_velocity =
                    parse_bool(value).ok_or_else(|| format!("invalid value {value:?} for {key}"))?
            }
            "pf.estimate" => {
                t.pf.estimate_mode = match value {
                    "mean" => EstimateMode::WeightedMean,
                    "max" => EstimateMode::MaxWeight,
                    _ => return Err(format!("invalid value {value:?} for {key} (mean|max)")),
                }
            }
            "pf.proposal" => {
                t.pf.proposal = match value {
                    "likelihood" => ProposalKind::Likelihood,
                    "transition" => ProposalKind::Transition,
                    _ => {
                        return Err(format!(
                            "invalid value {value:?} for {key} (likelihood|transition)"
                        ))
                    }
                }
            }
            "pf.recompute_at_shift" => {
                t.pf.recompute_at_shift =
                    parse_bool(value).ok_or_else(|| format!("invalid value {value:?} for {key}"))?
            }
            "pf.initial_at_predicted" => {
                t.pf.initial_at_predicted =
                    parse_bool(value).ok_or_else(|| format!("invalid value {value:?} for {key}"))?
            }
            "eval.skip_first_frame" => {
                self.skip_first_frame =
                    parse_bool(value).ok_or_else(|| format!("invalid value {value:?} for {key}"))?
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Every key with its current value, parseable by [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let t = &self.tracker;
        let mut s = String::new();
        let layers: Vec<String> = t.features.layers.iter().map(layer_text).collect();
        let _ = writeln!(s, "features.layers={}", layers.join(","));
        let _ = writeln!(s, "features.padding={}", t.features.padding);
        let _ = writeln!(s, "features.rows={}", t.features.feature_rows);
        let _ = writeln!(s, "features.cols={}", t.features.feature_cols);
        let ext = self
            .external_features
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        let _ = writeln!(s, "features.external={ext}");
        let _ = writeln!(
            s,
            "filter.label_sigma_factor={}",
            t.filter.label_sigma_factor
        );
        let _ = writeln!(s, "filter.lambda={}", t.filter.lambda);
        let _ = writeln!(s, "filter.learning_rate={}", t.filter.learning_rate);
        let _ = writeln!(s, "likelihood.tau_rel={}", t.likelihood.tau_moments);
        let _ = writeln!(s, "likelihood.tau_seed={}", t.likelihood.tau_seed);
        let _ = writeln!(s, "likelihood.k_max={}", t.likelihood.k_max);
        let _ = writeln!(s, "likelihood.equal_weights={}", t.likelihood.equal_weights);
        let _ = writeln!(s, "likelihood.em_tolerance={}", t.likelihood.em_tolerance);
        let _ = writeln!(
            s,
            "likelihood.em_max_iterations={}",
            t.likelihood.em_max_iterations
        );
        let _ = writeln!(
            s,
            "likelihood.truncation_correction={}",
            t.likelihood.truncation_correction
        );
        let _ = writeln!(s, "pf.num_particles={}", t.pf.num_particles);
        let _ = writeln!(s, "pf.seed={}", t.pf.seed);
        let _ = writeln!(s, "pf.sigma2_floor_ratio={}", t.pf.sigma2_floor_ratio);
        let _ = writeln!(
            s,
            "pf.transition_position_ratio={}",
            t.pf.transition_position_ratio
        );
        let _ = writeln!(s, "pf.transition_size_ratio={}", t.pf.transition_size_ratio);
        let _ = writeln!(s, "pf.velocity_smoothing={}", t.pf.velocity_smoothing);
        let _ = writeln!(s, "pf.stratified_floor={}", t.pf.stratified_floor);
        let _ = writeln!(s, "pf.defensive_fraction={}", t.pf.defensive_fraction);
        let _ = writeln!(s, "pf.size_velocity={}", t.pf.size_velocity);
        let mode = match t.pf.estimate_mode {
            EstimateMode::WeightedMean => "mean",
            EstimateMode::MaxWeight => "max",
        };
        let _ = writeln!(s, "pf.estimate={mode}");
        let proposal = match t.pf.proposal {
            ProposalKind::Likelihood => "likelihood",
            ProposalKind::Transition => "transition",
        };
        let _ = writeln!(s, "pf.proposal={proposal}");
        let _ = writeln!(s, "pf.recompute_at_shift={}", t.pf.recompute_at_shift);
        let _ = writeln!(s, "pf.initial_at_predicted={}", t.pf.initial_at_predicted);
        let _ = writeln!(s, "eval.skip_first_frame={}", self.skip_first_frame);
        s
    }

    /// Feature source implied by the configuration. External maps are sampled on the
    /// configured feature raster.
    pub fn feature_source(&self) -> Result<FeatureSource> {
        let f = &self.tracker.features;
        match &self.external_features {
            None => Ok(FeatureSource::Extracted(f.clone())),
            Some(path) => Ok(FeatureSource::External {
                frames: read_feature_file(path)?,
                padding: f.padding,
                rows: f.feature_rows,
                cols: f.feature_cols,
            }),
        }
    }
}
