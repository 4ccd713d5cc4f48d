//! Regression and classification objectives with masked mean reduction.

use super::Tensor2;
use crate::error::{AaiError, Result};

fn check_same_shape(a: &Tensor2, b: &Tensor2) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(AaiError::Shape(format!(
            "prediction {:?} vs target {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Mean of squared residuals over every element.
pub fn mse(target: &Tensor2, pred: &Tensor2) -> Result<f64> {
    check_same_shape(target, pred)?;
    let n = target.data().len();
    if n == 0 {
        return Err(AaiError::EmptyInput("mse of an empty tensor".into()));
    }
    let sum: f64 = target
        .data()
        .iter()
        .zip(pred.data())
        .map(|(y, p)| (y - p) * (y - p))
        .sum();
    Ok(sum / n as f64)
}

/// MSE over rows whose mask is 1, with its gradient w.r.t. `pred`.
pub fn masked_mse(target: &Tensor2, pred: &Tensor2, row_mask: &[f64]) -> Result<(f64, Tensor2)> {
    check_same_shape(target, pred)?;
    if row_mask.len() != pred.rows() {
        return Err(AaiError::Shape("mask length differs from row count".into()));
    }
    let valid: f64 = row_mask.iter().sum();
    if valid == 0.0 {
        return Err(AaiError::EmptyInput("no unmasked rows".into()));
    }
    let n = valid * pred.cols() as f64;
    let mut grad = Tensor2::zeros(pred.rows(), pred.cols());
    let mut sum = 0.0;
    for (r, &m) in row_mask.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let g = grad.row_mut(r);
        for ((gv, y), p) in g.iter_mut().zip(target.row(r)).zip(pred.row(r)) {
            let d = p - y;
            sum += d * d;
            *gv = 2.0 * d / n;
        }
    }
    Ok((sum / n, grad))
}

/// Row-wise numerically stable log-softmax.
pub fn log_softmax(logits: &Tensor2) -> Tensor2 {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.iter_mut().for_each(|v| *v -= lse);
    }
    out
}

pub fn softmax(logits: &Tensor2) -> Tensor2 {
    let mut p = log_softmax(logits);
    p.map_inplace(f64::exp);
    p
}

/// `-(1/n) sum_i log p_i[label_i]` over per-frame probability rows.
pub fn cross_entropy(probs: &Tensor2, labels: &[usize]) -> Result<f64> {
    if labels.len() != probs.rows() {
        return Err(AaiError::Shape(format!(
            "{} labels for {} frames",
            labels.len(),
            probs.rows()
        )));
    }
    if labels.is_empty() {
        return Err(AaiError::EmptyInput("cross entropy of zero frames".into()));
    }
    let mut sum = 0.0;
    for (r, &l) in labels.iter().enumerate() {
        if l >= probs.cols() {
            return Err(AaiError::OutOfRange(format!(
                "label {l} outside {} classes",
                probs.cols()
            )));
        }
        let row = probs.row(r);
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > 1e-6 || row.iter().any(|&p| p < 0.0) {
            return Err(AaiError::InvalidValue(format!(
                "frame {r} is not a distribution (sums to {total})"
            )));
        }
        sum -= row[l].ln();
    }
    Ok(sum / labels.len() as f64)
}

/// Softmax cross entropy from logits over unmasked rows, with its gradient
/// w.r.t. the logits.
pub fn masked_softmax_cross_entropy(logits: &Tensor2, labels: &[usize], row_mask: &[f64]) -> Result<(f64, Tensor2)> {
    if labels.len() != logits.rows() || row_mask.len() != logits.rows() {
        return Err(AaiError::Shape("labels/mask length differs from row count".into()));
    }
    let valid: f64 = row_mask.iter().sum();
    if valid == 0.0 {
        return Err(AaiError::EmptyInput("no unmasked rows".into()));
    }
    let logp = log_softmax(logits);
    let mut grad = Tensor2::zeros(logits.rows(), logits.cols());
    let mut sum = 0.0;
    for (r, (&l, &m)) in labels.iter().zip(row_mask).enumerate() {
        if m == 0.0 {
            continue;
        }
        if l >= logits.cols() {
            return Err(AaiError::OutOfRange(format!(
                "label {l} outside {} classes",
                logits.cols()
            )));
        }
        sum -= logp.get(r, l);
        let g = grad.row_mut(r);
        for (gv, lp) in g.iter_mut().zip(logp.row(r)) {
            *gv = lp.exp() / valid;
        }
        g[l] -= 1.0 / valid;
    }
    Ok((sum / valid, grad))
}

/// `mse + alpha * ce`.
pub fn combined_loss(contour_term: f64, phoneme_term: f64, alpha: f64) -> Result<f64> {
    if !(contour_term.is_finite() && phoneme_term.is_finite()) {
        return Err(AaiError::NonFinite("loss term".into()));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(AaiError::InvalidValue(format!("alpha must be >= 0, got {alpha}")));
    }
    Ok(contour_term + alpha * phoneme_term)
}
