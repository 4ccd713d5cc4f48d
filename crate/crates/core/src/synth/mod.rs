//! Synthetic corpus with a known articulatory-to-acoustic forward map.
//!
//! Four hidden parameters drive both the contour (through an orthogonal
//! deformation basis) and the audio (through formant-like spectral peaks
//! whose centres move monotonically with the parameters), so the inversion
//! problem has an exact answer.

mod geometry;

pub use geometry::{base_contour, deformation_basis, BASIS_SCALE};

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::contour::{
    Acquisition, Audio, PhonemeLabel, SegmentInterval, TongueContour, CONTOUR_DIM, IMAGE_SIZE_PX, N_PHONEMES,
};
use crate::corpus::{write_corpus, Corpus, PhonemeInventory};
use crate::error::{AaiError, Result};
use crate::par::ordered_map;

pub const N_LATENT: usize = 4;
pub const SAMPLE_RATE_HZ: u32 = 16000;
/// Real-time MRI frame rate.
pub const CONTOUR_FPS: f64 = 50.0;
/// Phoneme grid over (p0, p1); class 0 is silence.
const LABEL_GRID: (usize, usize) = (6, 7);
const MAX_CLIPPED_FRACTION: f64 = 0.01;
/// Harmonic amplitudes are refreshed every this many samples.
const CONTROL_BLOCK: usize = 8;
/// Pitch period of 80 samples, half the hop, so frames of a frozen
/// articulator see identical waveforms.
const F0_HZ: f64 = 200.0;

/// Silence plus 37 French SAMPA symbols and five loan phonemes.
pub const PHONEME_SYMBOLS: [&str; N_PHONEMES] = [
    "sil", "p", "b", "t", "d", "k", "g", "f", "v", "s", "z", "S", "Z", "m", "n", "J", "N", "l", "R", "w", "H", "j",
    "i", "e", "E", "a", "A", "O", "o", "u", "y", "2", "9", "@", "e~", "a~", "o~", "9~", "x", "h", "tS", "dZ", "G",
];

pub fn phoneme_inventory() -> PhonemeInventory {
    PhonemeInventory::new(PHONEME_SYMBOLS.iter().map(|s| s.to_string()).collect()).expect("valid inventory")
}

/// How the hidden parameters evolve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LatentMode {
    /// Smooth band-limited trajectories, fresh per acquisition.
    Random,
    /// Frozen articulators.
    Constant([f64; N_LATENT]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_acquisitions: usize,
    pub sentences_per_acquisition: usize,
    /// Sentence length is drawn uniformly from this range.
    pub sentence_s: (f64, f64),
    /// Silence before, between and after sentences.
    pub gap_s: f64,
    /// Chance that a sentence contains one short pause.
    pub pause_probability: f64,
    pub pause_s: f64,
    /// Standard deviation of the white noise added to the audio.
    pub noise_std: f64,
    pub seed: u64,
    pub latent_mode: LatentMode,
    pub base_contour: Vec<f64>,
    /// `N_LATENT` mutually orthogonal 100-dim deformation vectors.
    pub deformation_basis: Vec<Vec<f64>>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_acquisitions: 30,
            sentences_per_acquisition: 3,
            sentence_s: (0.4, 0.7),
            gap_s: 0.2,
            pause_probability: 0.3,
            pause_s: 0.08,
            noise_std: 1e-3,
            seed: 0,
            latent_mode: LatentMode::Random,
            base_contour: base_contour(),
            deformation_basis: deformation_basis(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AaiError::Config(m.to_string()));
        if self.n_acquisitions == 0 || self.sentences_per_acquisition == 0 {
            return bad("need at least one acquisition and one sentence");
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std must be >= 0");
        }
        let positive = |r: (f64, f64)| r.0 > 0.0 && r.0 <= r.1 && r.1.is_finite();
        if !positive(self.sentence_s) || !(self.gap_s > 0.0) || !(self.pause_s > 0.0) {
            return bad("durations must be positive with min <= max");
        }
        if !(0.0..=1.0).contains(&self.pause_probability) {
            return bad("pause_probability must lie in [0, 1]");
        }
        if self.base_contour.len() != CONTOUR_DIM
            || self.deformation_basis.len() != N_LATENT
            || self.deformation_basis.iter().any(|b| b.len() != CONTOUR_DIM)
        {
            return bad("base contour must have 100 values and the basis 4 x 100");
        }
        for i in 0..N_LATENT {
            for j in 0..i {
                let (a, b) = (&self.deformation_basis[i], &self.deformation_basis[j]);
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if dot.abs() > 1e-9 * scale.max(1.0) {
                    return bad("deformation basis vectors are not orthogonal");
                }
            }
        }
        if let LatentMode::Constant(p) = self.latent_mode {
            if p.iter().any(|v| !v.is_finite()) {
                return bad("constant latent must be finite");
            }
        }
        Ok(())
    }
}

/// Sum of a few slow sinusoids squashed by tanh, one per hidden parameter.
#[derive(Debug, Clone)]
pub struct LatentTrack {
    mode: LatentMode,
    bias: [f64; N_LATENT],
    /// (amplitude, frequency Hz, phase) per component.
    components: [[(f64, f64, f64); 3]; N_LATENT],
}

impl LatentTrack {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut bias = [0.0; N_LATENT];
        let mut components = [[(0.0, 0.0, 0.0); 3]; N_LATENT];
        for k in 0..N_LATENT {
            bias[k] = rng.gen_range(-0.3..0.3);
            for c in &mut components[k] {
                *c = (
                    rng.gen_range(0.3..0.8),
                    rng.gen_range(0.3..3.0),
                    rng.gen_range(0.0..2.0 * PI),
                );
            }
        }
        Self {
            mode: LatentMode::Random,
            bias,
            components,
        }
    }

    pub fn constant(p: [f64; N_LATENT]) -> Self {
        Self {
            mode: LatentMode::Constant(p),
            bias: [0.0; N_LATENT],
            components: [[(0.0, 0.0, 0.0); 3]; N_LATENT],
        }
    }

    pub fn at(&self, t: f64) -> [f64; N_LATENT] {
        if let LatentMode::Constant(p) = self.mode {
            return p;
        }
        let mut p = [0.0; N_LATENT];
        for k in 0..N_LATENT {
            let s: f64 = self.components[k]
                .iter()
                .map(|&(a, f, phi)| a * (2.0 * PI * f * t + phi).sin())
                .sum();
            p[k] = (self.bias[k] + s).tanh();
        }
        p
    }
}

/// Unclipped flattened contour for parameters `p`.
pub fn contour_from_latent(cfg: &SynthConfig, p: &[f64; N_LATENT]) -> Vec<f64> {
    let mut c = cfg.base_contour.clone();
    for (b, &pk) in cfg.deformation_basis.iter().zip(p) {
        c.iter_mut().zip(b).for_each(|(v, bv)| *v += pk * bv);
    }
    c
}

/// Formant centres in Hz; each moves monotonically with one parameter.
pub fn formant_centres(p: &[f64; N_LATENT]) -> [f64; N_LATENT] {
    const CENTRE: [f64; N_LATENT] = [500.0, 1400.0, 2500.0, 3500.0];
    const SWING: [f64; N_LATENT] = [200.0, 400.0, 350.0, 400.0];
    std::array::from_fn(|k| CENTRE[k] + SWING[k] * p[k])
}

fn harmonic_amplitudes(p: &[f64; N_LATENT], f0: f64, out: &mut Vec<f64>) {
    const GAIN: [f64; N_LATENT] = [1.0, 0.7, 0.5, 0.35];
    const BANDWIDTH: [f64; N_LATENT] = [150.0, 180.0, 220.0, 260.0];
    let centres = formant_centres(p);
    out.clear();
    let nyquist = 0.5 * SAMPLE_RATE_HZ as f64;
    let mut n = 1;
    while (n as f64) * f0 < nyquist - f0 {
        let f = n as f64 * f0;
        let env: f64 = (0..N_LATENT)
            .map(|k| GAIN[k] * (-0.5 * ((f - centres[k]) / BANDWIDTH[k]).powi(2)).exp())
            .sum();
        out.push(0.04 * (env + 0.02));
        n += 1;
    }
}

/// Voiced audio for a parameter track; `gate[n]` is 1 where speech is produced.
fn render_audio(track: &LatentTrack, gate: &[f64], noise_std: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sr = SAMPLE_RATE_HZ as f64;
    let mut out = vec![0.0; gate.len()];
    let mut amps = Vec::new();
    let f0 = F0_HZ;
    let mut phase = 0.0;
    let mut level = 0.0;
    for (n, y) in out.iter_mut().enumerate() {
        let t = n as f64 / sr;
        if n % CONTROL_BLOCK == 0 {
            harmonic_amplitudes(&track.at(t), f0, &mut amps);
        }
        // ~6 ms attack and release at voicing changes
        level += (gate[n] - level) * 0.01;
        phase = (phase + 2.0 * PI * f0 / sr) % (2.0 * PI);
        if level > 1e-6 {
            *y = level
                * amps
                    .iter()
                    .enumerate()
                    .map(|(h, a)| a * ((h + 1) as f64 * phase).sin())
                    .sum::<f64>();
        }
    }
    if noise_std > 0.0 {
        let normal = Normal::new(0.0, noise_std).expect("finite std");
        out.iter_mut().for_each(|y| *y += normal.sample(rng));
    }
    out
}

/// Stationary audio for fixed parameters, without noise.
pub fn static_audio(p: &[f64; N_LATENT], duration_s: f64) -> Vec<f64> {
    let n = (duration_s * SAMPLE_RATE_HZ as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    render_audio(&LatentTrack::constant(*p), &vec![1.0; n], 0.0, &mut rng)
}

/// Quantizes (p0, p1) onto a 6 x 7 grid; classes 1..=42.
pub fn phoneme_class(p: &[f64; N_LATENT]) -> usize {
    let cell = |v: f64, n: usize| (((v + 1.0) * 0.5 * n as f64).floor().max(0.0) as usize).min(n - 1);
    1 + cell(p[0], LABEL_GRID.0) * LABEL_GRID.1 + cell(p[1], LABEL_GRID.1)
}

struct Span {
    start: usize,
    end: usize,
    /// `None` is silence; otherwise the phoneme class.
    phone: Option<usize>,
    inter: bool,
}

/// Silences and voiced stretches; a sentence may be cut in two by a pause.
fn timeline(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Span> {
    let samples = |s: f64| (s * SAMPLE_RATE_HZ as f64).round() as usize;
    let mut spans = Vec::new();
    let mut at = 0;
    let mut push = |len: usize, voiced: bool, inter: bool| {
        spans.push(Span {
            start: at,
            end: at + len,
            phone: voiced.then_some(0),
            inter,
        });
        at += len;
    };
    push(samples(cfg.gap_s), false, true);
    for _ in 0..cfg.sentences_per_acquisition {
        let length = samples(rng.gen_range(cfg.sentence_s.0..=cfg.sentence_s.1)).max(2);
        if rng.gen_bool(cfg.pause_probability) {
            push(length / 2, true, false);
            push(samples(cfg.pause_s), false, false);
            push(length - length / 2, true, false);
        } else {
            push(length, true, false);
        }
        push(samples(cfg.gap_s), false, true);
    }
    spans
}

/// Cuts voiced spans into phones wherever the articulation crosses into
/// another label region. Regions are read on the audio control grid, so a
/// phone boundary coincides with a spectrum update.
fn phones(spans: Vec<Span>, track: &LatentTrack) -> Vec<Span> {
    let class_at = |n: usize| {
        let block = n - n % CONTROL_BLOCK;
        phoneme_class(&track.at(block as f64 / SAMPLE_RATE_HZ as f64))
    };
    let mut out = Vec::new();
    for s in spans {
        if s.phone.is_none() {
            out.push(s);
            continue;
        }
        let mut start = s.start;
        let mut class = class_at(start);
        let first_block = (s.start / CONTROL_BLOCK + 1) * CONTROL_BLOCK;
        for n in (first_block..s.end).step_by(CONTROL_BLOCK) {
            let c = class_at(n);
            if c != class {
                out.push(Span {
                    start,
                    end: n,
                    phone: Some(class),
                    inter: false,
                });
                (start, class) = (n, c);
            }
        }
        out.push(Span {
            start,
            end: s.end,
            phone: Some(class),
            inter: false,
        });
    }
    out
}

/// One acquisition; the random stream is derived from the root seed and index.
pub fn generate_acquisition(cfg: &SynthConfig, index: usize, phonemes: &PhonemeInventory) -> Result<Acquisition> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64 + 1);
    let track = match cfg.latent_mode {
        LatentMode::Random => LatentTrack::random(&mut rng),
        LatentMode::Constant(p) => LatentTrack::constant(p),
    };
    let spans = phones(timeline(cfg, &mut rng), &track);
    let n_samples = spans.last().map_or(0, |s| s.end);
    let sr = SAMPLE_RATE_HZ as f64;

    let mut gate = vec![0.0; n_samples];
    for s in spans.iter().filter(|s| s.phone.is_some()) {
        gate[s.start..s.end].iter_mut().for_each(|g| *g = 1.0);
    }
    let samples = render_audio(&track, &gate, cfg.noise_std, &mut rng);

    let silence = phonemes.label(0)?;
    let segments = spans
        .iter()
        .map(|s| {
            let (a, b) = (s.start as f64 / sr, s.end as f64 / sr);
            let label = match s.phone {
                Some(class) => PhonemeLabel::new(class, false)?,
                None => silence,
            };
            SegmentInterval::new(a, b, label, s.inter)
        })
        .collect::<Result<Vec<_>>>()?;

    let duration = n_samples as f64 / sr;
    let n_frames = ((duration - 1.0 / CONTOUR_FPS) * CONTOUR_FPS).floor() as usize + 1;
    let mut clipped = 0;
    let contours = (0..n_frames)
        .map(|i| {
            let t = (i as f64 + 0.5) / CONTOUR_FPS;
            let mut flat = contour_from_latent(cfg, &track.at(t));
            if flat.iter().any(|v| !(0.0..=IMAGE_SIZE_PX).contains(v)) {
                clipped += 1;
                flat.iter_mut().for_each(|v| *v = v.clamp(0.0, IMAGE_SIZE_PX));
            }
            TongueContour::from_flat(&flat, t)
        })
        .collect::<Result<Vec<_>>>()?;
    if clipped as f64 > MAX_CLIPPED_FRACTION * n_frames as f64 {
        return Err(AaiError::Config(format!(
            "{clipped} of {n_frames} contours leave the image; shrink the deformation basis"
        )));
    }
    Acquisition::new(
        format!("acq{index:03}"),
        Audio {
            samples,
            sample_rate_hz: SAMPLE_RATE_HZ,
        },
        contours,
        segments,
    )
}

pub fn generate_corpus(cfg: &SynthConfig) -> Result<Corpus> {
    cfg.validate()?;
    let phonemes = phoneme_inventory();
    let indices: Vec<usize> = (0..cfg.n_acquisitions).collect();
    let acquisitions = ordered_map(&indices, |&i| generate_acquisition(cfg, i, &phonemes))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus { phonemes, acquisitions })
}

/// Generates the corpus and writes it in the corpus directory layout.
pub fn generate(cfg: &SynthConfig, dir: &Path) -> Result<Corpus> {
    let corpus = generate_corpus(cfg)?;
    write_corpus(dir, &corpus)?;
    Ok(corpus)
}
