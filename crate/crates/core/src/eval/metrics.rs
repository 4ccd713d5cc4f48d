use serde::{Deserialize, Serialize};

use crate::contour::{flatten_contour, PixelScale, TongueContour, CONTOUR_DIM};
use crate::error::{AaiError, Result};
use crate::neural::Tensor2;

/// How a frame's contour error is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    /// Root mean square over the 100 flattened coordinates.
    #[default]
    CoordinateRmse,
    /// Mean Euclidean distance between corresponding points.
    PointDistance,
}

fn check_points(pred: &TongueContour, truth: &TongueContour) -> Result<()> {
    if pred.points().len() != truth.points().len() {
        return Err(AaiError::Shape(format!(
            "contours have {} and {} points",
            pred.points().len(),
            truth.points().len()
        )));
    }
    Ok(())
}

/// Frame RMSE in millimetres over flattened pixel coordinates.
pub fn frame_rmse(pred: &TongueContour, truth: &TongueContour, scale: PixelScale) -> Result<f64> {
    check_points(pred, truth)?;
    Ok(flat_rmse_px(&flatten_contour(pred), &flatten_contour(truth)) * scale.mm_per_pixel())
}

pub fn frame_point_distance(pred: &TongueContour, truth: &TongueContour, scale: PixelScale) -> Result<f64> {
    check_points(pred, truth)?;
    let n = pred.points().len() as f64;
    let sum: f64 = pred
        .points()
        .iter()
        .zip(truth.points())
        .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
        .sum();
    Ok(sum / n * scale.mm_per_pixel())
}

pub fn frame_error(pred: &TongueContour, truth: &TongueContour, scale: PixelScale, metric: ErrorMetric) -> Result<f64> {
    match metric {
        ErrorMetric::CoordinateRmse => frame_rmse(pred, truth, scale),
        ErrorMetric::PointDistance => frame_point_distance(pred, truth, scale),
    }
}

/// RMSE between two flattened contours, in whatever unit they share.
pub fn flat_rmse_px(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), CONTOUR_DIM);
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub median: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(AaiError::EmptyInput("no values to summarize".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[m]
    } else {
        0.5 * (sorted[m - 1] + sorted[m])
    };
    Ok(Summary { mean, std, median })
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Percentage of frames whose most probable class is the label.
pub fn phoneme_accuracy(posteriors: &Tensor2, labels: &[usize]) -> Result<f64> {
    if posteriors.rows() != labels.len() {
        return Err(AaiError::Shape(format!(
            "{} posterior rows for {} labels",
            posteriors.rows(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(AaiError::EmptyInput("no frames to score".into()));
    }
    let hits = labels
        .iter()
        .enumerate()
        .filter(|&(r, &l)| argmax(posteriors.row(r)) == l)
        .count();
    Ok(100.0 * hits as f64 / labels.len() as f64)
}
