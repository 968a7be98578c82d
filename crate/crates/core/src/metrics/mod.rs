//! Monocular depth error metrics: AbsRel, SqRel, RMSE, RMSE(log) and the
//! δ < 1.25^k accuracies, with masking, optional alignment of relative-depth
//! predictions and pooled aggregation over frames.

mod align;
mod report;

pub use align::{align_prediction, fit_alignment, inverse_depth_residual, AlignmentFit};
pub use report::{format_report, report_row, EvalReport, FrameScore, REPORT_COLUMNS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::{DepthMap, Mask};

/// Accuracy thresholds `1.25^k`, exact in binary floating point.
pub const DELTA_THRESHOLDS: [f64; 3] = [1.25, 1.5625, 1.953125];

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("shape mismatch: ground truth {gt:?}, prediction {pred:?}")]
    Shape { gt: (u32, u32), pred: (u32, u32) },
    #[error("no valid pixels to evaluate")]
    EmptyMask,
    #[error("pixel {index} is masked in but has non-positive or non-finite depth")]
    InvalidMaskedDepth { index: usize },
    #[error("alignment is degenerate: {0}")]
    DegenerateAlignment(&'static str),
    #[error("nothing to aggregate")]
    EmptyAggregate,
    #[error("cannot aggregate reports with different alignment modes")]
    MixedAlignment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    #[default]
    None,
    /// Scale by the median of `gt / pred` over the mask.
    MedianScale,
    /// Prediction is inverse depth; fit `a·p + b ≈ 1/gt` by least squares.
    AffineInverseDepth,
}

impl std::fmt::Display for Alignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Alignment::None => "none",
            Alignment::MedianScale => "median-scale",
            Alignment::AffineInverseDepth => "affine-inverse-depth",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Every valid pixel of every frame weighs the same.
    #[default]
    PixelWeighted,
    /// Every frame weighs the same.
    FrameAveraged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub abs_rel: f64,
    pub sq_rel: f64,
    /// Metres.
    pub rmse: f64,
    pub rmse_log: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub valid_pixel_count: u64,
    pub alignment: Alignment,
}

impl MetricReport {
    /// The seven statistics in table column order.
    pub fn values(&self) -> [f64; 7] {
        [
            self.abs_rel,
            self.sq_rel,
            self.rmse,
            self.rmse_log,
            self.delta1,
            self.delta2,
            self.delta3,
        ]
    }
}

/// Ground-truth depth range considered valid, `(near, far]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipRange {
    pub near: f64,
    pub far: f64,
}

impl Default for ClipRange {
    fn default() -> Self {
        ClipRange {
            near: 0.01,
            far: 5.0,
        }
    }
}

fn check_shape(gt: &DepthMap, pred: &DepthMap) -> Result<(), EvalError> {
    if gt.dims() != pred.dims() {
        return Err(EvalError::Shape {
            gt: gt.dims(),
            pred: pred.dims(),
        });
    }
    Ok(())
}

/// True where the ground truth holds a depth inside `clip` and the
/// prediction is finite and positive.
pub fn valid_mask(gt: &DepthMap, pred: &DepthMap, clip: ClipRange) -> Result<Mask, EvalError> {
    check_shape(gt, pred)?;
    let data = gt
        .values()
        .iter()
        .zip(pred.values())
        .map(|(&g, &p)| g.is_finite() && g > clip.near && g <= clip.far && p.is_finite() && p > 0.0)
        .collect();
    let (w, h) = gt.dims();
    Ok(Mask::from_vec(w, h, data).expect("sized to map"))
}

/// Running sums from which every statistic can be finished; pooling frames
/// is adding their sums.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricSums {
    pub count: u64,
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub sq_err: f64,
    pub sq_log_err: f64,
    pub within: [u64; 3],
}

impl MetricSums {
    pub fn push(&mut self, gt: f64, pred: f64) {
        let diff = pred - gt;
        self.count += 1;
        self.abs_rel += diff.abs() / gt;
        self.sq_rel += diff * diff / gt;
        self.sq_err += diff * diff;
        let log_diff = pred.ln() - gt.ln();
        self.sq_log_err += log_diff * log_diff;
        for (k, t) in DELTA_THRESHOLDS.iter().enumerate() {
            // max(p/g, g/p) < t without the rounding of a division.
            if pred < t * gt && gt < t * pred {
                self.within[k] += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &MetricSums) {
        self.count += other.count;
        self.abs_rel += other.abs_rel;
        self.sq_rel += other.sq_rel;
        self.sq_err += other.sq_err;
        self.sq_log_err += other.sq_log_err;
        for k in 0..3 {
            self.within[k] += other.within[k];
        }
    }

    pub fn finish(&self, alignment: Alignment) -> Result<MetricReport, EvalError> {
        if self.count == 0 {
            return Err(EvalError::EmptyMask);
        }
        let n = self.count as f64;
        Ok(MetricReport {
            abs_rel: self.abs_rel / n,
            sq_rel: self.sq_rel / n,
            rmse: (self.sq_err / n).sqrt(),
            rmse_log: (self.sq_log_err / n).sqrt(),
            delta1: self.within[0] as f64 / n,
            delta2: self.within[1] as f64 / n,
            delta3: self.within[2] as f64 / n,
            valid_pixel_count: self.count,
            alignment,
        })
    }
}

pub fn metric_sums(gt: &DepthMap, pred: &DepthMap, mask: &Mask) -> Result<MetricSums, EvalError> {
    check_shape(gt, pred)?;
    if mask.dims() != gt.dims() {
        return Err(EvalError::Shape {
            gt: gt.dims(),
            pred: mask.dims(),
        });
    }
    let mut sums = MetricSums::default();
    for (i, ((&g, &p), &m)) in gt
        .values()
        .iter()
        .zip(pred.values())
        .zip(mask.data())
        .enumerate()
    {
        if !m {
            continue;
        }
        if !(g.is_finite() && g > 0.0 && p.is_finite() && p > 0.0) {
            return Err(EvalError::InvalidMaskedDepth { index: i });
        }
        sums.push(g, p);
    }
    Ok(sums)
}

/// Scores `pred` against `gt` over the masked pixels. The report is tagged
/// [`Alignment::None`]; use [`evaluate`] to align first.
pub fn compute_metrics(
    gt: &DepthMap,
    pred: &DepthMap,
    mask: &Mask,
) -> Result<MetricReport, EvalError> {
    metric_sums(gt, pred, mask)?.finish(Alignment::None)
}

/// Mask, align and score one frame.
pub fn evaluate(
    gt: &DepthMap,
    pred: &DepthMap,
    alignment: Alignment,
    clip: ClipRange,
) -> Result<MetricReport, EvalError> {
    let mask = valid_mask(gt, pred, clip)?;
    let aligned = align_prediction(gt, pred, &mask, alignment)?;
    // Alignment can invalidate pixels (affine results <= 0).
    let mask = valid_mask(gt, &aligned, clip)?;
    metric_sums(gt, &aligned, &mask)?.finish(alignment)
}

/// Combines per-frame reports into one dataset-level report.
///
/// Pixel-weighted aggregation equals computing the metrics over the pooled
/// pixels: means are weighted by pixel count, RMSE-type values through their
/// weighted mean square.
pub fn aggregate_report(
    reports: &[MetricReport],
    mode: Aggregation,
) -> Result<MetricReport, EvalError> {
    let first = reports.first().ok_or(EvalError::EmptyAggregate)?;
    if reports.iter().any(|r| r.alignment != first.alignment) {
        return Err(EvalError::MixedAlignment);
    }
    if reports.len() == 1 {
        return Ok(*first);
    }
    let total: u64 = reports.iter().map(|r| r.valid_pixel_count).sum();
    if total == 0 {
        return Err(EvalError::EmptyMask);
    }
    let (norm, weight): (f64, fn(&MetricReport) -> f64) = match mode {
        Aggregation::PixelWeighted => (total as f64, |r| r.valid_pixel_count as f64),
        Aggregation::FrameAveraged => (reports.len() as f64, |_| 1.0),
    };
    let mean = |f: &dyn Fn(&MetricReport) -> f64| {
        reports.iter().map(|r| weight(r) * f(r)).sum::<f64>() / norm
    };
    let root_mean_sq = |f: &dyn Fn(&MetricReport) -> f64| match mode {
        Aggregation::PixelWeighted => mean(&|r| f(r) * f(r)).sqrt(),
        Aggregation::FrameAveraged => mean(f),
    };
    Ok(MetricReport {
        abs_rel: mean(&|r| r.abs_rel),
        sq_rel: mean(&|r| r.sq_rel),
        rmse: root_mean_sq(&|r| r.rmse),
        rmse_log: root_mean_sq(&|r| r.rmse_log),
        delta1: mean(&|r| r.delta1),
        delta2: mean(&|r| r.delta2),
        delta3: mean(&|r| r.delta3),
        valid_pixel_count: total,
        alignment: first.alignment,
    })
}
