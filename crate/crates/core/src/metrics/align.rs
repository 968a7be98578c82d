use serde::{Deserialize, Serialize};

use super::{check_shape, Alignment, EvalError};
use crate::render::{DepthMap, Mask, INVALID_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlignmentFit {
    Identity,
    Scale {
        s: f64,
    },
    /// `depth = 1 / (a·p + b)` for an inverse-depth prediction `p`.
    AffineInverse {
        a: f64,
        b: f64,
    },
}

impl AlignmentFit {
    /// Applies the fit to every pixel. Pixels without a finite positive
    /// prediction, or whose fitted inverse depth is not positive, become
    /// invalid.
    pub fn apply(&self, pred: &DepthMap) -> DepthMap {
        let values = pred
            .values()
            .iter()
            .map(|&p| match *self {
                AlignmentFit::Identity => p,
                AlignmentFit::Scale { s } => p * s,
                AlignmentFit::AffineInverse { a, b } => {
                    if !(p.is_finite() && p > 0.0) {
                        return INVALID_DEPTH;
                    }
                    let inv = a * p + b;
                    let d = 1.0 / inv;
                    if inv > 0.0 && d.is_finite() {
                        d
                    } else {
                        INVALID_DEPTH
                    }
                }
            })
            .collect();
        DepthMap::from_vec(pred.width(), pred.height(), values).expect("same size")
    }
}

fn masked_pairs<'a>(
    gt: &'a DepthMap,
    pred: &'a DepthMap,
    mask: &'a Mask,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    gt.values()
        .iter()
        .zip(pred.values())
        .zip(mask.data())
        .filter(|(_, &m)| m)
        .map(|((&g, &p), _)| (g, p))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn fit_alignment(
    gt: &DepthMap,
    pred: &DepthMap,
    mask: &Mask,
    mode: Alignment,
) -> Result<AlignmentFit, EvalError> {
    check_shape(gt, pred)?;
    if mask.dims() != gt.dims() {
        return Err(EvalError::Shape {
            gt: gt.dims(),
            pred: mask.dims(),
        });
    }
    match mode {
        Alignment::None => Ok(AlignmentFit::Identity),
        Alignment::MedianScale => {
            let mut ratios: Vec<f64> = masked_pairs(gt, pred, mask).map(|(g, p)| g / p).collect();
            if ratios.is_empty() {
                return Err(EvalError::EmptyMask);
            }
            let s = median(&mut ratios);
            if !(s.is_finite() && s > 0.0) {
                return Err(EvalError::DegenerateAlignment(
                    "median ratio is not positive",
                ));
            }
            Ok(AlignmentFit::Scale { s })
        }
        Alignment::AffineInverseDepth => {
            let pairs: Vec<(f64, f64)> = masked_pairs(gt, pred, mask)
                .map(|(g, p)| (p, 1.0 / g))
                .collect();
            if pairs.len() < 2 {
                return Err(EvalError::EmptyMask);
            }
            let n = pairs.len() as f64;
            let p_mean = pairs.iter().map(|&(p, _)| p).sum::<f64>() / n;
            let q_mean = pairs.iter().map(|&(_, q)| q).sum::<f64>() / n;
            let (mut spp, mut spq, mut p2) = (0.0, 0.0, 0.0);
            for &(p, q) in &pairs {
                let dp = p - p_mean;
                spp += dp * dp;
                spq += dp * (q - q_mean);
                p2 += p * p;
            }
            if spp.is_nan() || spp <= 1e-12 * p2 {
                return Err(EvalError::DegenerateAlignment(
                    "prediction is constant over the mask",
                ));
            }
            let a = spq / spp;
            let b = q_mean - a * p_mean;
            if !(a.is_finite() && b.is_finite()) {
                return Err(EvalError::DegenerateAlignment("non-finite fit"));
            }
            Ok(AlignmentFit::AffineInverse { a, b })
        }
    }
}

/// Fits the alignment over the masked pixels and applies it to the whole
/// prediction.
pub fn align_prediction(
    gt: &DepthMap,
    pred: &DepthMap,
    mask: &Mask,
    mode: Alignment,
) -> Result<DepthMap, EvalError> {
    Ok(fit_alignment(gt, pred, mask, mode)?.apply(pred))
}

/// Sum of squared inverse-depth residuals `Σ (a·p + b − 1/gt)²` over the mask.
pub fn inverse_depth_residual(gt: &DepthMap, pred: &DepthMap, mask: &Mask, a: f64, b: f64) -> f64 {
    masked_pairs(gt, pred, mask)
        .map(|(g, p)| {
            let r = a * p + b - 1.0 / g;
            r * r
        })
        .sum()
}
