use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};

use super::DspConfig;
use crate::contour::{FeatureFrame, N_MFCC};
use crate::error::{AaiError, Result};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the mel scale between 0 Hz and Nyquist.
///
/// Each weight is evaluated at the exact bin frequency, so narrow low-frequency
/// filters never collapse to zero width.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// `n_filters` rows of `fft_size / 2 + 1` weights.
    weights: Vec<Vec<f64>>,
}

impl MelFilterbank {
    pub fn new(n_filters: usize, fft_size: usize, sample_rate_hz: u32) -> Self {
        let n_bins = fft_size / 2 + 1;
        let nyquist = sample_rate_hz as f64 / 2.0;
        let mel_max = hz_to_mel(nyquist);
        let edges: Vec<f64> = (0..n_filters + 2)
            .map(|j| mel_to_hz(mel_max * j as f64 / (n_filters + 1) as f64))
            .collect();
        let weights = (1..=n_filters)
            .map(|m| {
                let (lo, mid, hi) = (edges[m - 1], edges[m], edges[m + 1]);
                (0..n_bins)
                    .map(|k| {
                        let f = k as f64 * sample_rate_hz as f64 / fft_size as f64;
                        if f > lo && f <= mid {
                            (f - lo) / (mid - lo)
                        } else if f > mid && f < hi {
                            (hi - f) / (hi - mid)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Self { weights }
    }

    pub fn n_filters(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| w.iter().zip(power).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Precomputed window, FFT plan, filterbank and DCT basis for one [`DspConfig`].
pub struct MfccExtractor {
    cfg: DspConfig,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    filterbank: MelFilterbank,
    dct: Vec<Vec<f64>>,
}

impl MfccExtractor {
    pub fn new(cfg: &DspConfig) -> Result<Self> {
        cfg.validate()?;
        let win = cfg.window_samples();
        let window = (0..win)
            .map(|n| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / (win - 1) as f64).cos())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
        let filterbank = MelFilterbank::new(cfg.n_mel_filters, cfg.fft_size, cfg.sample_rate_hz);
        // orthonormal DCT-II rows 0..n_mfcc
        let nf = cfg.n_mel_filters as f64;
        let dct = (0..cfg.n_mfcc)
            .map(|k| {
                let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
                (0..cfg.n_mel_filters)
                    .map(|n| scale * (std::f64::consts::PI * k as f64 * (n as f64 + 0.5) / nf).cos())
                    .collect()
            })
            .collect();
        Ok(Self {
            cfg: cfg.clone(),
            window,
            fft,
            filterbank,
            dct,
        })
    }

    pub fn config(&self) -> &DspConfig {
        &self.cfg
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    /// Cepstra for every full window of `audio`.
    pub fn compute(&self, audio: &[f64], sample_rate_hz: u32) -> Result<Vec<Vec<f64>>> {
        let cfg = &self.cfg;
        if sample_rate_hz != cfg.sample_rate_hz {
            return Err(AaiError::Config(format!(
                "audio sampled at {sample_rate_hz} Hz, front end expects {} Hz",
                cfg.sample_rate_hz
            )));
        }
        let win = cfg.window_samples();
        let n_frames = cfg.frame_count(audio.len());
        if n_frames == 0 {
            return Err(AaiError::EmptyInput(format!(
                "{} samples is shorter than one {win}-sample window",
                audio.len()
            )));
        }
        if audio.iter().any(|v| !v.is_finite()) {
            return Err(AaiError::InvalidValue("audio contains non-finite samples".into()));
        }

        let mut emphasized = Vec::with_capacity(audio.len());
        emphasized.push(audio[0]);
        emphasized.extend(audio.windows(2).map(|w| w[1] - cfg.preemphasis * w[0]));

        let hop = cfg.hop_samples();
        let n_bins = cfg.fft_size / 2 + 1;
        let mut buf = vec![Complex::new(0.0, 0.0); cfg.fft_size];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut power = vec![0.0; n_bins];
        let mut out = Vec::with_capacity(n_frames);
        for j in 0..n_frames {
            let frame = &emphasized[j * hop..j * hop + win];
            buf.fill(Complex::new(0.0, 0.0));
            for (b, (x, w)) in buf.iter_mut().zip(frame.iter().zip(&self.window)) {
                b.re = x * w;
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (p, c) in power.iter_mut().zip(&buf[..n_bins]) {
                *p = c.norm_sqr();
            }
            let log_energies: Vec<f64> = self
                .filterbank
                .apply(&power)
                .into_iter()
                .map(|e| e.max(cfg.log_floor).ln())
                .collect();
            out.push(
                self.dct
                    .iter()
                    .map(|row| row.iter().zip(&log_energies).map(|(a, b)| a * b).sum())
                    .collect(),
            );
        }
        Ok(out)
    }
}

/// One cepstral vector per hop: pre-emphasis, Hamming window, power spectrum,
/// mel filterbank, floored log and orthonormal DCT-II.
pub fn compute_mfcc(audio: &[f64], sample_rate_hz: u32, cfg: &DspConfig) -> Result<Vec<Vec<f64>>> {
    MfccExtractor::new(cfg)?.compute(audio, sample_rate_hz)
}

/// Full 39-dimensional frames (MFCC, delta, delta-delta) with centre times.
pub fn extract_features(audio: &[f64], sample_rate_hz: u32, cfg: &DspConfig) -> Result<Vec<FeatureFrame>> {
    if cfg.n_mfcc != N_MFCC {
        return Err(AaiError::Config(format!(
            "feature frames hold {N_MFCC} coefficients, config asks for {}",
            cfg.n_mfcc
        )));
    }
    let mfcc = compute_mfcc(audio, sample_rate_hz, cfg)?;
    let (delta, delta2) = super::compute_deltas(&mfcc, cfg.delta_halfwidth);
    let copy = |v: &[f64]| {
        let mut a = [0.0; N_MFCC];
        a.copy_from_slice(v);
        a
    };
    Ok((0..mfcc.len())
        .map(|j| FeatureFrame {
            mfcc: copy(&mfcc[j]),
            delta: copy(&delta[j]),
            delta2: copy(&delta2[j]),
            t_s: cfg.frame_center_s(j),
        })
        .collect())
}
