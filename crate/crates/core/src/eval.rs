//! One-pass evaluation and tracker comparison.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::BoundingBox;
use crate::pfilter::{run_tracker, FeatureSource, FrameReport, ProposalKind, TrackerConfig};
use crate::sequences::Sequence;

pub const PRECISION_MAX_PX: usize = 50;
pub const SUCCESS_STEPS: usize = 20;
pub const PRECISION_THRESHOLD_PX: usize = 20;

pub fn center_error(a: &BoundingBox, b: &BoundingBox) -> f64 {
    ((a.cx - b.cx).powi(2) + (a.cy - b.cy).powi(2)).sqrt()
}

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.left().max(b.left())).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.top().max(b.top())).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    inter / (a.area() + b.area() - inter)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpeResult {
    /// Fraction of frames with center error `<= t` for `t = 0, 1, ..., 50` pixels.
    pub precision_curve: Vec<f64>,
    /// Fraction of frames with IoU `>= t` for `t = 0, 0.05, ..., 1`.
    pub success_curve: Vec<f64>,
    pub precision_at_20: f64,
    /// Mean of the success curve.
    pub auc: f64,
    pub mean_center_error: f64,
    pub frames: usize,
}

pub fn success_threshold(i: usize) -> f64 {
    i as f64 / SUCCESS_STEPS as f64
}

/// Curves from per-frame estimates; the first frame is dropped when `skip_first`.
pub fn ope_from_boxes(
    estimates: &[BoundingBox],
    truth: &[BoundingBox],
    skip_first: bool,
) -> Result<OpeResult> {
    if estimates.len() != truth.len() {
        return Err(Error::CountMismatch(format!(
            "{} estimates for {} ground-truth boxes",
            estimates.len(),
            truth.len()
        )));
    }
    let start = usize::from(skip_first).min(estimates.len());
    let pairs: Vec<(&BoundingBox, &BoundingBox)> =
        estimates[start..].iter().zip(&truth[start..]).collect();
    if pairs.is_empty() {
        return Err(Error::CountMismatch("no frames to evaluate".into()));
    }
    let k = pairs.len() as f64;
    let errors: Vec<f64> = pairs.iter().map(|(e, t)| center_error(e, t)).collect();
    let overlaps: Vec<f64> = pairs.iter().map(|(e, t)| iou(e, t)).collect();
    let precision_curve: Vec<f64> = (0..=PRECISION_MAX_PX)
        .map(|t| errors.iter().filter(|&&e| e <= t as f64).count() as f64 / k)
        .collect();
    let success_curve: Vec<f64> = (0..=SUCCESS_STEPS)
        .map(|i| {
            overlaps
                .iter()
                .filter(|&&o| o >= success_threshold(i))
                .count() as f64
                / k
        })
        .collect();
    let auc = success_curve.iter().sum::<f64>() / success_curve.len() as f64;
    Ok(OpeResult {
        precision_at_20: precision_curve[PRECISION_THRESHOLD_PX],
        precision_curve,
        success_curve,
        auc,
        mean_center_error: errors.iter().sum::<f64>() / k,
        frames: pairs.len(),
    })
}

/// Tracks the sequence once from its first ground-truth box and scores the run.
pub fn run_ope(
    cfg: &TrackerConfig,
    seq: &Sequence,
    source: &FeatureSource,
    skip_first: bool,
) -> Result<(OpeResult, Vec<FrameReport>)> {
    let truth = seq.ground_truth.as_ref().ok_or(Error::MissingGroundTruth)?;
    let reports = run_tracker(&seq.frames, truth[0], cfg, source)?;
    let estimates: Vec<BoundingBox> = reports.iter().map(|r| r.estimate).collect();
    Ok((ope_from_boxes(&estimates, truth, skip_first)?, reports))
}

/// CSV of both curves: `kind,threshold,value`.
pub fn curves_csv(r: &OpeResult) -> String {
    let mut s = String::from("kind,threshold,value\n");
    for (t, v) in r.precision_curve.iter().enumerate() {
        let _ = writeln!(s, "precision,{t},{v:.6}");
    }
    for (i, v) in r.success_curve.iter().enumerate() {
        let _ = writeln!(s, "success,{:.2},{v:.6}", success_threshold(i));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub sequence: String,
    pub attribute: String,
    pub tracker: String,
    /// Means over seeds.
    pub precision_at_20: f64,
    pub auc: f64,
    pub mean_center_error: f64,
    /// Success AUC of every seed, in seed order.
    pub auc_per_seed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedDiff {
    pub sequence: String,
    pub attribute: String,
    /// First tracker minus second, averaged over seeds.
    pub precision_at_20: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub trackers: [String; 2],
    pub rows: Vec<CompareRow>,
    pub diffs: Vec<PairedDiff>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSummary {
    pub attribute: String,
    pub sequences: usize,
    /// Per tracker: mean precision@20 and mean AUC.
    pub means: [(f64, f64); 2],
    pub diff_precision_at_20: f64,
    pub diff_auc: f64,
}

fn sign(v: f64) -> &'static str {
    if v > 0.0 {
        "+"
    } else if v < 0.0 {
        "-"
    } else {
        "0"
    }
}

impl CompareReport {
    pub fn by_attribute(&self) -> Vec<AttributeSummary> {
        let mut attrs: Vec<String> = Vec::new();
        for d in &self.diffs {
            if !attrs.contains(&d.attribute) {
                attrs.push(d.attribute.clone());
            }
        }
        attrs
            .into_iter()
            .map(|a| {
                let mut means = [(0.0, 0.0); 2];
                for (slot, name) in means.iter_mut().zip(&self.trackers) {
                    let rows: Vec<&CompareRow> = self
                        .rows
                        .iter()
                        .filter(|r| r.attribute == a && &r.tracker == name)
                        .collect();
                    let n = rows.len().max(1) as f64;
                    *slot = (
                        rows.iter().map(|r| r.precision_at_20).sum::<f64>() / n,
                        rows.iter().map(|r| r.auc).sum::<f64>() / n,
                    );
                }
                let diffs: Vec<&PairedDiff> =
                    self.diffs.iter().filter(|d| d.attribute == a).collect();
                let n = diffs.len() as f64;
                AttributeSummary {
                    attribute: a,
                    sequences: diffs.len(),
                    means,
                    diff_precision_at_20: diffs.iter().map(|d| d.precision_at_20).sum::<f64>() / n,
                    diff_auc: diffs.iter().map(|d| d.auc).sum::<f64>() / n,
                }
            })
            .collect()
    }

    pub fn mean_auc_diff(&self) -> f64 {
        self.diffs.iter().map(|d| d.auc).sum::<f64>() / self.diffs.len().max(1) as f64
    }

    pub fn positive_auc_diffs(&self) -> usize {
        self.diffs.iter().filter(|d| d.auc > 0.0).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("sequence,attribute,tracker,precision_at_20,auc,mean_center_error\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{:.3}",
                r.sequence, r.attribute, r.tracker, r.precision_at_20, r.auc, r.mean_center_error
            );
        }
        s
    }

    pub fn diffs_csv(&self) -> String {
        let mut s = String::from("sequence,attribute,diff_precision_at_20,diff_auc,sign\n");
        for d in &self.diffs {
            let _ = writeln!(
                s,
                "{},{},{:+.6},{:+.6},{}",
                d.sequence,
                d.attribute,
                d.precision_at_20,
                d.auc,
                sign(d.auc)
            );
        }
        s
    }

    /// Human-readable per-attribute summary.
    pub fn table(&self) -> String {
        let [a, b] = &self.trackers;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<10} {:>4}  {:>10} {:>10}  {:>10} {:>10}  {:>9} {:>9}",
            "attribute",
            "seqs",
            format!("{a} P@20"),
            format!("{a} AUC"),
            format!("{b} P@20"),
            format!("{b} AUC"),
            "dP@20",
            "dAUC"
        );
        for r in self.by_attribute() {
            let _ = writeln!(
                s,
                "{:<10} {:>4}  {:>10.3} {:>10.3}  {:>10.3} {:>10.3}  {:>+9.3} {:>+9.3}",
                r.attribute,
                r.sequences,
                r.means[0].0,
                r.means[0].1,
                r.means[1].0,
                r.means[1].1,
                r.diff_precision_at_20,
                r.diff_auc
            );
        }
        let _ = writeln!(
            s,
            "mean dAUC {:+.4}; {}/{} sequences favour {a}",
            self.mean_auc_diff(),
            self.positive_auc_diffs(),
            self.diffs.len()
        );
        s
    }
}

/// Runs two tracker configurations on every sequence with the same seeds.
pub fn compare_trackers(
    named: [(&str, &TrackerConfig); 2],
    sequences: &[Sequence],
    seeds: &[u64],
    source: &FeatureSource,
    skip_first: bool,
) -> Result<CompareReport> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed required".into()));
    }
    let mut rows = Vec::with_capacity(sequences.len() * 2);
    let mut diffs = Vec::with_capacity(sequences.len());
    for seq in sequences {
        let mut pair = Vec::with_capacity(2);
        for (name, cfg) in named {
            let mut results = Vec::with_capacity(seeds.len());
            for &seed in seeds {
                let mut c = cfg.clone();
                c.pf.seed = seed;
                results.push(run_ope(&c, seq, source, skip_first)?.0);
            }
            let n = results.len() as f64;
            let row = CompareRow {
                sequence: seq.name.clone(),
                attribute: seq.primary_attribute().to_string(),
                tracker: name.to_string(),
                precision_at_20: results.iter().map(|r| r.precision_at_20).sum::<f64>() / n,
                auc: results.iter().map(|r| r.auc).sum::<f64>() / n,
                mean_center_error: results.iter().map(|r| r.mean_center_error).sum::<f64>() / n,
                auc_per_seed: results.iter().map(|r| r.auc).collect(),
            };
            pair.push(row.clone());
            rows.push(row);
        }
        diffs.push(PairedDiff {
            sequence: seq.name.clone(),
            attribute: seq.primary_attribute().to_string(),
            precision_at_20: pair[0].precision_at_20 - pair[1].precision_at_20,
            auc: pair[0].auc - pair[1].auc,
        });
    }
    Ok(CompareReport {
        trackers: [named[0].0.to_string(), named[1].0.to_string()],
        rows,
        diffs,
    })
}

/// Likelihood-proposal tracker against the transition-proposal baseline at equal
/// particle counts and seeds.
pub fn compare_proposals(
    cfg: &TrackerConfig,
    sequences: &[Sequence],
    seeds: &[u64],
    source: &FeatureSource,
    skip_first: bool,
) -> Result<CompareReport> {
    let mut lik = cfg.clone();
    lik.pf.proposal = ProposalKind::Likelihood;
    let mut base = cfg.clone();
    base.pf.proposal = ProposalKind::Transition;
    compare_trackers(
        [("likelihood", &lik), ("transition", &base)],
        sequences,
        seeds,
        source,
        skip_first,
    )
}
