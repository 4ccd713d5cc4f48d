use crate::contour::{flatten_contour, TongueContour};
use crate::dsp::norm::MomentAccumulator;
use crate::dsp::DimStats;
use crate::error::{AaiError, Result};

/// Acquisitions on each side that contribute to an acquisition's contour
/// statistics.
pub const NORM_WINDOW: usize = 30;

/// First and second contour moments of one acquisition, mergeable across a
/// window without revisiting the contours.
#[derive(Debug, Clone, Default)]
pub struct ContourMoments(MomentAccumulator);

impl ContourMoments {
    pub fn from_contours(contours: &[TongueContour]) -> Result<Self> {
        let mut acc = MomentAccumulator::default();
        for c in contours {
            acc.push(&flatten_contour(c))?;
        }
        Ok(Self(acc))
    }

    pub fn count(&self) -> usize {
        self.0.count()
    }
}

/// Index range `[i - 30, i + 30]` clamped to the corpus.
pub fn norm_window(n: usize, index: usize) -> std::ops::RangeInclusive<usize> {
    index.saturating_sub(NORM_WINDOW)..=(index + NORM_WINDOW).min(n - 1)
}

/// Contour statistics for acquisition `index` over its ±30 neighbours.
pub fn contour_norm_stats(moments: &[ContourMoments], index: usize) -> Result<DimStats> {
    if moments.is_empty() {
        return Err(AaiError::EmptyInput("corpus has no acquisitions".into()));
    }
    if index >= moments.len() {
        return Err(AaiError::OutOfRange(format!(
            "acquisition index {index} in a corpus of {}",
            moments.len()
        )));
    }
    let mut acc = MomentAccumulator::default();
    for m in &moments[norm_window(moments.len(), index)] {
        acc.merge(&m.0)?;
    }
    acc.finish()
}

/// [`contour_norm_stats`] for every acquisition.
pub fn all_contour_norm_stats(moments: &[ContourMoments]) -> Result<Vec<DimStats>> {
    (0..moments.len()).map(|i| contour_norm_stats(moments, i)).collect()
}
