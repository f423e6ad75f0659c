//! One-pass evaluation metrics: center-error precision and overlap success.

use alloc::vec::Vec;

use crate::imaging::Rect;
use crate::{Error, Result};

/// Largest center-error threshold of the precision curve, in pixels.
pub const PRECISION_MAX_THRESHOLD: usize = 50;
/// Number of uniformly spaced overlap thresholds in `[0, 1]`.
pub const SUCCESS_STEPS: usize = 21;

pub fn center_error(pred: &Rect, gt: &Rect) -> f64 {
    let dx = pred.cx - gt.cx;
    let dy = pred.cy - gt.cy;
    libm::sqrt(dx * dx + dy * dy)
}

/// Intersection over union of two axis-aligned boxes.
pub fn iou(a: &Rect, b: &Rect) -> f64 {
    let area = |r: &Rect| (r.right() - r.left()) * (r.bottom() - r.top());
    let iw = (a.right().min(b.right()) - a.left().max(b.left())).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.top().max(b.top())).max(0.0);
    let inter = iw * ih;
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

fn check_lengths(pred: &[Rect], gt: &[Rect]) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::Dimension {
            expected: "one prediction per ground-truth frame",
            actual: "different number of predictions",
        });
    }
    if pred.is_empty() {
        return Err(Error::Input("cannot evaluate an empty sequence"));
    }
    Ok(())
}

/// Fraction of frames with center error `<= t` for `t = 0, 1, ..., 50` px.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionCurve {
    pub values: Vec<f64>,
}

impl PrecisionCurve {
    pub fn at(&self, threshold_px: usize) -> f64 {
        self.values[threshold_px]
    }

    pub fn precision_20(&self) -> f64 {
        self.at(20)
    }

    pub fn thresholds(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|t| t as f64)
    }
}

pub fn precision_from_errors(errors: &[f64]) -> PrecisionCurve {
    let n = errors.len() as f64;
    let values = (0..=PRECISION_MAX_THRESHOLD)
        .map(|t| errors.iter().filter(|&&e| e <= t as f64).count() as f64 / n)
        .collect();
    PrecisionCurve { values }
}

pub fn precision_curve(pred: &[Rect], gt: &[Rect]) -> Result<PrecisionCurve> {
    check_lengths(pred, gt)?;
    let errors: Vec<f64> = pred.iter().zip(gt).map(|(p, g)| center_error(p, g)).collect();
    Ok(precision_from_errors(&errors))
}

/// Fraction of frames with overlap `> t` at 21 thresholds `0, 0.05, ..., 1`;
/// the AUC is their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessCurve {
    pub values: Vec<f64>,
    pub auc: f64,
}

impl SuccessCurve {
    pub fn thresholds(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(success_threshold)
    }
}

pub fn success_threshold(i: usize) -> f64 {
    i as f64 / (SUCCESS_STEPS - 1) as f64
}

pub fn success_from_overlaps(overlaps: &[f64]) -> SuccessCurve {
    let n = overlaps.len() as f64;
    let values: Vec<f64> = (0..SUCCESS_STEPS)
        .map(|i| {
            let t = success_threshold(i);
            overlaps.iter().filter(|&&o| o > t).count() as f64 / n
        })
        .collect();
    let auc = values.iter().sum::<f64>() / SUCCESS_STEPS as f64;
    SuccessCurve { values, auc }
}

pub fn success_curve(pred: &[Rect], gt: &[Rect]) -> Result<SuccessCurve> {
    check_lengths(pred, gt)?;
    let overlaps: Vec<f64> = pred.iter().zip(gt).map(|(p, g)| iou(p, g)).collect();
    Ok(success_from_overlaps(&overlaps))
}

/// Per-frame errors and both curves for one tracked sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub center_errors: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub precision: PrecisionCurve,
    pub success: SuccessCurve,
    pub mean_fps: f64,
}

impl EvalResult {
    pub fn precision_20(&self) -> f64 {
        self.precision.precision_20()
    }

    pub fn success_auc(&self) -> f64 {
        self.success.auc
    }

    pub fn mean_center_error(&self) -> f64 {
        self.center_errors.iter().sum::<f64>() / self.center_errors.len() as f64
    }
}

pub fn evaluate(pred: &[Rect], gt: &[Rect], mean_fps: f64) -> Result<EvalResult> {
    check_lengths(pred, gt)?;
    let center_errors: Vec<f64> = pred.iter().zip(gt).map(|(p, g)| center_error(p, g)).collect();
    let overlaps: Vec<f64> = pred.iter().zip(gt).map(|(p, g)| iou(p, g)).collect();
    Ok(EvalResult {
        precision: precision_from_errors(&center_errors),
        success: success_from_overlaps(&overlaps),
        center_errors,
        overlaps,
        mean_fps,
    })
}
