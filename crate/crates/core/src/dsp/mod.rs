//! Audio front end: MFCC extraction, regression deltas, context stacking,
//! z-score normalization and the `AAIF` feature file format.

mod aaif;
mod context;
mod deltas;
mod mfcc;
pub(crate) mod norm;
mod wav;

pub use aaif::{read_aaif, read_aaif_file, write_aaif, write_aaif_file, AaifMatrix, AAIF_MAGIC, AAIF_VERSION};
pub use context::{stack_context, ContextConfig};
pub use deltas::compute_deltas;
pub use mfcc::{compute_mfcc, extract_features, hz_to_mel, mel_to_hz, MelFilterbank, MfccExtractor};
pub use norm::DimStats;
pub use wav::{read_wav, write_wav};

use serde::{Deserialize, Serialize};

use crate::error::{AaiError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DspConfig {
    pub sample_rate_hz: u32,
    pub window_ms: f64,
    pub hop_ms: f64,
    pub n_mfcc: usize,
    pub n_mel_filters: usize,
    pub fft_size: usize,
    pub preemphasis: f64,
    pub delta_halfwidth: usize,
    pub log_floor: f64,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 16000,
            window_ms: 25.0,
            hop_ms: 10.0,
            n_mfcc: 13,
            n_mel_filters: 26,
            fft_size: 512,
            preemphasis: 0.97,
            delta_halfwidth: 2,
            log_floor: 1e-10,
        }
    }
}

impl DspConfig {
    pub fn window_samples(&self) -> usize {
        (self.sample_rate_hz as f64 * self.window_ms / 1000.0).round() as usize
    }

    pub fn hop_samples(&self) -> usize {
        (self.sample_rate_hz as f64 * self.hop_ms / 1000.0).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window_ms > self.hop_ms && self.hop_ms > 0.0) {
            return Err(AaiError::Config(format!(
                "need window_ms > hop_ms > 0, got {} / {}",
                self.window_ms, self.hop_ms
            )));
        }
        if self.n_mfcc == 0 || self.n_mfcc > self.n_mel_filters {
            return Err(AaiError::Config(format!(
                "n_mfcc = {} must be in 1..={}",
                self.n_mfcc, self.n_mel_filters
            )));
        }
        if self.fft_size < self.window_samples() {
            return Err(AaiError::Config(format!(
                "fft_size {} shorter than the {}-sample window",
                self.fft_size,
                self.window_samples()
            )));
        }
        if !(self.log_floor > 0.0) || !(0.0..1.0).contains(&self.preemphasis) {
            return Err(AaiError::Config(
                "log_floor must be > 0 and preemphasis in [0, 1)".into(),
            ));
        }
        if self.hop_samples() == 0 {
            return Err(AaiError::Config("hop shorter than one sample".into()));
        }
        Ok(())
    }

    /// Number of frames produced for `n` samples (0 when shorter than a window).
    pub fn frame_count(&self, n: usize) -> usize {
        let win = self.window_samples();
        if n < win {
            0
        } else {
            (n - win) / self.hop_samples() + 1
        }
    }

    /// Centre time of frame `j` in seconds.
    pub fn frame_center_s(&self, j: usize) -> f64 {
        (j * self.hop_samples()) as f64 / self.sample_rate_hz as f64
            + self.window_samples() as f64 / (2.0 * self.sample_rate_hz as f64)
    }
}
