//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the library's numeric kernels: the MFCC oracle is a
//! direct O(N^2) DFT with its own filterbank and DCT, and gradients are checked
//! by central differences on the public forward passes.

#![allow(dead_code)]

use std::f64::consts::PI;

use aai_core::dsp::{ContextConfig, DspConfig};
use aai_core::models::{ArchSpec, InversionModel, Variant};
use aai_core::neural::{
    masked_mse, masked_softmax_cross_entropy, Activation, Batch, BatchLayout, BiLstmLayer, DenseLayer, Param, SeqModel,
    SequenceExample, Tensor2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// MFCC

fn mel(f: f64) -> f64 {
    // same curve as 2595 log10(1 + f/700), written with ln
    1127.0 * (1.0 + f / 700.0).ln()
}

fn inv_mel(m: f64) -> f64 {
    700.0 * ((m / 1127.0).exp() - 1.0)
}

/// Brute-force cepstra: per-frame pre-emphasis from the raw signal, Hamming,
/// direct DFT, triangular mel weights, floored natural log, orthonormal DCT-II.
pub fn mfcc_oracle(x: &[f64], cfg: &DspConfig) -> Vec<Vec<f64>> {
    let sr = cfg.sample_rate_hz as f64;
    let win = (sr * cfg.window_ms / 1000.0).round() as usize;
    let hop = (sr * cfg.hop_ms / 1000.0).round() as usize;
    let nfft = cfg.fft_size;
    let nb = nfft / 2 + 1;
    let nf = cfg.n_mel_filters;
    let centres: Vec<f64> = (0..nf + 2)
        .map(|j| inv_mel(j as f64 * mel(sr / 2.0) / (nf + 1) as f64))
        .collect();
    let n_frames = if x.len() < win { 0 } else { (x.len() - win) / hop + 1 };

    let mut out = Vec::new();
    for j in 0..n_frames {
        let start = j * hop;
        let frame: Vec<f64> = (0..win)
            .map(|n| {
                let i = start + n;
                let prev = if i == 0 { 0.0 } else { cfg.preemphasis * x[i - 1] };
                let w = 0.54 - 0.46 * (2.0 * PI * n as f64 / (win as f64 - 1.0)).cos();
                (x[i] - prev) * w
            })
            .collect();
        let power: Vec<f64> = (0..nb)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, v) in frame.iter().enumerate() {
                    let a = -2.0 * PI * ((k * n) % nfft) as f64 / nfft as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                re * re + im * im
            })
            .collect();
        let logs: Vec<f64> = (0..nf)
            .map(|m| {
                let (l, c, r) = (centres[m], centres[m + 1], centres[m + 2]);
                let e: f64 = (0..nb)
                    .map(|k| {
                        let f = k as f64 * sr / nfft as f64;
                        let w = ((f - l) / (c - l)).min((r - f) / (r - c)).max(0.0);
                        w * power[k]
                    })
                    .sum();
                e.max(cfg.log_floor).ln()
            })
            .collect();
        out.push(
            (0..cfg.n_mfcc)
                .map(|q| {
                    let a = if q == 0 { 1.0 / nf as f64 } else { 2.0 / nf as f64 };
                    a.sqrt()
                        * logs
                            .iter()
                            .enumerate()
                            .map(|(m, v)| v * (PI * q as f64 * (2 * m + 1) as f64 / (2 * nf) as f64).cos())
                            .sum::<f64>()
                })
                .collect(),
        );
    }
    out
}

/// `||a - b|| / ||b||` over one vector.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let n: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    d / n.max(1e-300)
}

// ---------------------------------------------------------------------------
// Finite differences

pub const FD_EPS: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;

/// Relative error used for gradient checks, robust near zero.
pub fn grad_rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-5)
}

/// Central difference of `f` with respect to `x[i]`.
pub fn central_diff(x: &mut [f64], i: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + FD_EPS;
    let up = f(x);
    x[i] = orig - FD_EPS;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * FD_EPS)
}

/// Compares analytic parameter gradients (already accumulated into `grad`)
/// with central differences of `loss`, evaluated after perturbing each entry
/// of each parameter in turn. `coords` limits how many entries per parameter
/// are probed (all when `None`). Returns the worst relative error.
pub fn check_param_grads<M>(
    model: &mut M,
    params: fn(&mut M) -> Vec<&mut Param>,
    loss: impl Fn(&M) -> f64,
    coords: Option<usize>,
) -> f64 {
    let analytic: Vec<Vec<f64>> = params(model).iter().map(|p| p.grad.data().to_vec()).collect();
    let mut worst: f64 = 0.0;
    for (pi, grads) in analytic.iter().enumerate() {
        let n = grads.len();
        let step = match coords {
            Some(c) if c < n => n.div_ceil(c),
            _ => 1,
        };
        for i in (0..n).step_by(step) {
            let orig = params(model)[pi].value.data()[i];
            params(model)[pi].value.data_mut()[i] = orig + FD_EPS;
            let up = loss(model);
            params(model)[pi].value.data_mut()[i] = orig - FD_EPS;
            let down = loss(model);
            params(model)[pi].value.data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * FD_EPS);
            worst = worst.max(grad_rel_err(grads[i], numeric));
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// PCA

/// Root-mean-square residual of the best rank-`k` affine approximation of the
/// rows of `data` (row-major, `n x d`).
pub fn pca_residual_rmse(data: &[Vec<f64>], k: usize) -> f64 {
    let n = data.len();
    let d = data[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let m = nalgebra::DMatrix::from_fn(n, d, |i, j| data[i][j] - mean[j]);
    let sv = m.svd(false, false).singular_values;
    let mut s: Vec<f64> = sv.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let tail: f64 = s.iter().skip(k).map(|v| v * v).sum();
    (tail / (n * d) as f64).sqrt()
}

// ---------------------------------------------------------------------------
// Gradient-check instances. Each returns the worst relative error over every
// parameter and input coordinate it probes.

fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor2 {
    Tensor2::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn dot(a: &Tensor2, b: &Tensor2) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn input_grad_err(x: &Tensor2, dx: &Tensor2, f: impl Fn(&Tensor2) -> f64) -> f64 {
    let mut xv = x.data().to_vec();
    let (r, c) = x.shape();
    (0..xv.len())
        .map(|i| {
            let n = central_diff(&mut xv, i, |v| f(&Tensor2::from_vec(r, c, v.to_vec()).unwrap()));
            grad_rel_err(dx.data()[i], n)
        })
        .fold(0.0, f64::max)
}

struct DenseCase {
    layer: DenseLayer,
    x: Tensor2,
    proj: Tensor2,
}

fn dense_params(c: &mut DenseCase) -> Vec<&mut Param> {
    c.layer.params_mut()
}

/// Random projection of a dense layer's output.
pub fn dense_case(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, din, dout) = (rng.gen_range(1..=7), rng.gen_range(1..=8), rng.gen_range(1..=8));
    let act = if seed % 2 == 0 {
        Activation::Tanh
    } else {
        Activation::Identity
    };
    let mut c = DenseCase {
        layer: DenseLayer::new("d", din, dout, act, &mut rng),
        x: random_tensor(&mut rng, rows, din),
        proj: random_tensor(&mut rng, rows, dout),
    };
    c.layer.forward_train(&c.x).unwrap();
    let dx = c.layer.backward(&c.proj).unwrap();
    let loss = |c: &DenseCase| dot(&c.layer.forward(&c.x).unwrap(), &c.proj);
    let p = check_param_grads(&mut c, dense_params, loss, None);
    let i = input_grad_err(&c.x, &dx, |x| dot(&c.layer.forward(x).unwrap(), &c.proj));
    p.max(i)
}

struct LstmCase {
    layer: BiLstmLayer,
    layout: BatchLayout,
    x: Tensor2,
    proj: Tensor2,
}

fn lstm_params(c: &mut LstmCase) -> Vec<&mut Param> {
    c.layer.params_mut()
}

/// Ragged batch through a bidirectional layer; padded projection rows are zero.
pub fn bilstm_case(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = rng.gen_range(1..=3);
    let lengths: Vec<usize> = (0..batch).map(|_| rng.gen_range(1..=7)).collect();
    let layout = BatchLayout::new(lengths).unwrap();
    let (din, hidden) = (rng.gen_range(1..=5), rng.gen_range(1..=4));
    let layer = BiLstmLayer::new("l", din, hidden, &mut rng);
    let x = random_tensor(&mut rng, layout.rows(), din);
    let mut proj = random_tensor(&mut rng, layout.rows(), 2 * hidden);
    for (r, m) in layout.row_mask().iter().enumerate() {
        if *m == 0.0 {
            proj.row_mut(r).fill(0.0);
        }
    }
    let mut c = LstmCase { layer, layout, x, proj };
    c.layer.forward_train(&c.x, &c.layout).unwrap();
    let dx = c.layer.backward(&c.proj, &c.layout).unwrap();
    let loss = |c: &LstmCase| dot(&c.layer.forward(&c.x, &c.layout).unwrap(), &c.proj);
    let p = check_param_grads(&mut c, lstm_params, loss, None);
    let i = input_grad_err(&c.x, &dx, |x| dot(&c.layer.forward(x, &c.layout).unwrap(), &c.proj));
    p.max(i)
}

fn random_mask(rng: &mut ChaCha8Rng, rows: usize) -> Vec<f64> {
    let mut m: Vec<f64> = (0..rows).map(|_| if rng.gen_bool(0.7) { 1.0 } else { 0.0 }).collect();
    m[rng.gen_range(0..rows)] = 1.0;
    m
}

/// Masked softmax cross entropy with respect to the logits.
pub fn softmax_ce_case(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, classes) = (rng.gen_range(1..=7), rng.gen_range(2..=8));
    let logits = random_tensor(&mut rng, rows, classes);
    let labels: Vec<usize> = (0..rows).map(|_| rng.gen_range(0..classes)).collect();
    let mask = random_mask(&mut rng, rows);
    let (_, grad) = masked_softmax_cross_entropy(&logits, &labels, &mask).unwrap();
    input_grad_err(&logits, &grad, |l| {
        masked_softmax_cross_entropy(l, &labels, &mask).unwrap().0
    })
}

/// Masked mean squared error with respect to the prediction.
pub fn mse_case(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = (rng.gen_range(1..=7), rng.gen_range(1..=8));
    let target = random_tensor(&mut rng, rows, cols);
    let pred = random_tensor(&mut rng, rows, cols);
    let mask = random_mask(&mut rng, rows);
    let (_, grad) = masked_mse(&target, &pred, &mask).unwrap();
    input_grad_err(&pred, &grad, |p| masked_mse(&target, p, &mask).unwrap().0)
}

struct ModelCase {
    model: InversionModel,
    batch: Batch,
    alpha: f64,
}

fn model_params(c: &mut ModelCase) -> Vec<&mut Param> {
    c.model.params_mut()
}

/// Whole latent-target network (ST_AE or MT_AE) on a ragged two-sentence
/// batch, through the 16-dim regression head and, for MT_AE, the phoneme head.
pub fn latent_head_case(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let variant = if seed % 2 == 0 { Variant::StAe } else { Variant::MtAe };
    let spec =
        ArchSpec::new(variant, ContextConfig::new(1).unwrap()).with_sizes(rng.gen_range(2..=8), rng.gen_range(1..=4));
    let model = InversionModel::build(spec, seed).unwrap();
    let examples: Vec<SequenceExample> = (0..2)
        .map(|_| {
            let t = rng.gen_range(1..=7);
            SequenceExample {
                features: random_tensor(&mut rng, t, spec.input_dim()),
                targets: random_tensor(&mut rng, t, variant.regression_dim()),
                labels: variant
                    .has_phoneme_head()
                    .then(|| (0..t).map(|_| rng.gen_range(0..43)).collect()),
            }
        })
        .collect();
    let batch = Batch::from_examples(&examples.iter().collect::<Vec<_>>()).unwrap();
    let alpha = rng.gen_range(0.5..2.0);
    let mut c = ModelCase { model, batch, alpha };
    c.model.zero_grad();
    c.model.loss_and_grad(&c.batch, c.alpha).unwrap();
    check_param_grads(
        &mut c,
        model_params,
        |c| c.model.loss(&c.batch, c.alpha).unwrap().total,
        None,
    )
}
