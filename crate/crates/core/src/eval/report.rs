use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{summarize, ErrorMetric, Summary};
use crate::error::Result;

/// Error of one evaluated frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub sentence: String,
    pub frame: usize,
    pub t_s: f64,
    pub error_mm: f64,
    /// Error of the mean-contour predictor on the same frame.
    pub baseline_mm: f64,
    pub label: usize,
    pub predicted: Option<usize>,
}

/// Frames per split in the evaluated dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub arch: String,
    pub context: usize,
    pub split: String,
    pub seed: u64,
    pub metric: ErrorMetric,
    pub mm_per_pixel: f64,
    pub sentences: usize,
    pub frames: usize,
    pub rmse_mm: Summary,
    /// The same statistics for predicting the normalization mean contour.
    pub baseline_rmse_mm: Summary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub acc_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_cross_entropy: Option<f64>,
    pub frame_counts: SplitCounts,
}

impl EvalReport {
    /// Summaries computed from per-frame records.
    #[allow(clippy::too_many_arguments)]
    pub fn from_frames(
        arch: &str,
        context: usize,
        split: &str,
        seed: u64,
        metric: ErrorMetric,
        mm_per_pixel: f64,
        sentences: usize,
        records: &[FrameRecord],
        mean_cross_entropy: Option<f64>,
        frame_counts: SplitCounts,
    ) -> Result<Self> {
        let errors: Vec<f64> = records.iter().map(|r| r.error_mm).collect();
        let baseline: Vec<f64> = records.iter().map(|r| r.baseline_mm).collect();
        let acc_percent = records
            .iter()
            .map(|r| r.predicted.map(|p| p == r.label))
            .collect::<Option<Vec<bool>>>()
            .filter(|hits| !hits.is_empty())
            .map(|hits| 100.0 * hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64);
        Ok(Self {
            arch: arch.into(),
            context,
            split: split.into(),
            seed,
            metric,
            mm_per_pixel,
            sentences,
            frames: records.len(),
            rmse_mm: summarize(&errors)?,
            baseline_rmse_mm: summarize(&baseline)?,
            acc_percent,
            mean_cross_entropy,
            frame_counts,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Per-frame table; values are printed at full precision.
pub fn frames_csv(records: &[FrameRecord]) -> String {
    let mut s = String::from("sentence,frame,t_s,error_mm,baseline_mm,label,predicted\n");
    for r in records {
        let predicted = r.predicted.map(|p| p.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.sentence, r.frame, r.t_s, r.error_mm, r.baseline_mm, r.label, predicted
        );
    }
    s
}
