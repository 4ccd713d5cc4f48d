use serde::{Deserialize, Serialize};

use crate::contour::FEATURE_DIM;
use crate::error::{AaiError, Result};

/// Odd number of frames centred on the current one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextConfig {
    window_frames: usize,
}

impl ContextConfig {
    pub fn new(window_frames: usize) -> Result<Self> {
        if window_frames == 0 || window_frames % 2 == 0 {
            return Err(AaiError::Config(format!(
                "context window must be odd and >= 1, got {window_frames}"
            )));
        }
        Ok(Self { window_frames })
    }

    pub fn window_frames(&self) -> usize {
        self.window_frames
    }

    pub fn half(&self) -> usize {
        self.window_frames / 2
    }

    /// Stacked dimension for 39-dimensional frames.
    pub fn stacked_dim(&self) -> usize {
        FEATURE_DIM * self.window_frames
    }
}

/// Concatenates frames `t - half ..= t + half`, clamping indices at the ends.
pub fn stack_context(frames: &[Vec<f64>], ctx: ContextConfig) -> Result<Vec<Vec<f64>>> {
    if frames.is_empty() {
        return Err(AaiError::EmptyInput("no frames to stack".into()));
    }
    let n = frames.len() as isize;
    let half = ctx.half() as isize;
    let dim = frames[0].len();
    if frames.iter().any(|f| f.len() != dim) {
        return Err(AaiError::Shape("frames have differing dimensions".into()));
    }
    Ok((0..n)
        .map(|t| {
            let mut row = Vec::with_capacity(dim * ctx.window_frames());
            for k in -half..=half {
                row.extend_from_slice(&frames[(t + k).clamp(0, n - 1) as usize]);
            }
            row
        })
        .collect())
}
