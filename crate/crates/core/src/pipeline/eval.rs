use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{autoencoder_path, ensure_dir, load_autoencoder, load_model, write_text};
use crate::contour::{PixelScale, TongueContour};
use crate::corpus::{PreparedDataset, PreparedSentence, SplitName};
use crate::error::{AaiError, Result};
use crate::eval::{
    argmax, frame_error, frame_rmse, frames_csv, overlay_csv, overlay_svg, ErrorMetric, EvalReport, FrameRecord,
    OverlayFrame, SplitCounts,
};
use crate::models::{predict_normalized, ContourAutoencoder, ContourDecoder, InversionModel};
use crate::neural::cross_entropy;
use crate::par::ordered_map;

pub const REPORT_FILE: &str = "report.json";
pub const FRAMES_FILE: &str = "frames.csv";
/// Panels drawn when no frames are requested.
const DEFAULT_PANELS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalArgs {
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    pub ae_checkpoint: Option<PathBuf>,
    pub split: SplitName,
    pub out: PathBuf,
    pub mm_per_pixel: f64,
    pub metric: ErrorMetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotArgs {
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    pub ae_checkpoint: Option<PathBuf>,
    pub sentence: String,
    pub out: PathBuf,
    pub mm_per_pixel: f64,
    /// Frame indices to draw; evenly spaced frames when empty.
    pub frames: Vec<usize>,
}

struct Loaded {
    ds: PreparedDataset,
    model: InversionModel,
    ae: Option<ContourAutoencoder>,
}

fn load(dataset: &Path, checkpoint: &Path, ae: Option<&Path>) -> Result<Loaded> {
    let ds = PreparedDataset::open(dataset)?;
    let model = load_model(checkpoint)?;
    let (want, have) = (model.spec().input_dim(), ds.header.feature_dim);
    if want != have {
        return Err(AaiError::Shape(format!(
            "checkpoint {} expects {want}-dim features (W = {}), dataset {} has {have}-dim features (W = {})",
            checkpoint.display(),
            model.spec().context.window_frames(),
            dataset.display(),
            ds.header.context
        )));
    }
    let ae = if model.spec().variant.uses_autoencoder() {
        Some(load_autoencoder(&autoencoder_path(checkpoint, ae))?)
    } else {
        None
    };
    Ok(Loaded { ds, model, ae })
}

/// Predicted and true pixel-space contours plus posteriors for a sentence.
struct SentencePrediction {
    truth: Vec<TongueContour>,
    pred: Vec<TongueContour>,
    mean: TongueContour,
    posteriors: Option<crate::neural::Tensor2>,
}

fn predict(l: &Loaded, s: &PreparedSentence) -> Result<SentencePrediction> {
    let stats = l.ds.contour_stats(&s.acquisition)?;
    let decoder = l.ae.as_ref().map(|a| a as &dyn ContourDecoder);
    let (normalized, posteriors) = predict_normalized(&l.model, &s.features, decoder)?;
    let to_px = |row: &[f64], t: f64| TongueContour::from_flat(&stats.denormalize_row(row)?, t);
    let mut truth = Vec::with_capacity(s.times.len());
    let mut pred = Vec::with_capacity(s.times.len());
    for (j, &t) in s.times.iter().enumerate() {
        truth.push(to_px(s.contours.row(j), t)?);
        pred.push(to_px(normalized.row(j), t)?);
    }
    Ok(SentencePrediction {
        truth,
        pred,
        mean: TongueContour::from_flat(&stats.mean, 0.0)?,
        posteriors,
    })
}

/// Scores a checkpoint on one split and writes `report.json` and `frames.csv`.
pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let scale = PixelScale::new(args.mm_per_pixel)?;
    let l = load(&args.dataset, &args.checkpoint, args.ae_checkpoint.as_deref())?;
    let sentences = l.ds.load_split(args.split)?;
    if sentences.is_empty() {
        return Err(AaiError::EmptyInput(format!(
            "split {} has no sentences",
            args.split.as_str()
        )));
    }
    let per_sentence = ordered_map(&sentences, |s| -> Result<(Vec<FrameRecord>, Option<f64>)> {
        let p = predict(&l, s)?;
        let mut records = Vec::with_capacity(p.truth.len());
        for (j, (truth, pred)) in p.truth.iter().zip(&p.pred).enumerate() {
            records.push(FrameRecord {
                sentence: s.id.clone(),
                frame: j,
                t_s: s.times[j],
                error_mm: frame_error(pred, truth, scale, args.metric)?,
                baseline_mm: frame_error(&p.mean, truth, scale, args.metric)?,
                label: s.labels[j],
                predicted: p.posteriors.as_ref().map(|post| argmax(post.row(j))),
            });
        }
        let ce = p
            .posteriors
            .as_ref()
            .map(|post| cross_entropy(post, &s.labels))
            .transpose()?;
        Ok((records, ce))
    });
    let mut records = Vec::new();
    let mut ce_sum = None;
    for r in per_sentence {
        let (recs, ce) = r?;
        if let Some(ce) = ce {
            *ce_sum.get_or_insert(0.0) += ce * recs.len() as f64;
        }
        records.extend(recs);
    }
    let frames_in = |split| l.ds.entries(split).map(|e| e.frames).sum();
    let report = EvalReport::from_frames(
        l.model.spec().variant.tag(),
        l.model.spec().context.window_frames(),
        args.split.as_str(),
        l.ds.header.seed,
        args.metric,
        scale.mm_per_pixel(),
        sentences.len(),
        &records,
        ce_sum.map(|s: f64| s / records.len() as f64),
        SplitCounts {
            train: frames_in(SplitName::Train),
            validation: frames_in(SplitName::Validation),
            test: frames_in(SplitName::Test),
        },
    )?;
    ensure_dir(&args.out)?;
    write_text(&args.out.join(REPORT_FILE), &report.to_json())?;
    write_text(&args.out.join(FRAMES_FILE), &frames_csv(&records))?;
    log::info!(
        "{} on {}: RMSE {:.3} ± {:.3} mm, median {:.3} mm (mean-contour baseline median {:.3} mm){}",
        report.arch,
        report.split,
        report.rmse_mm.mean,
        report.rmse_mm.std,
        report.rmse_mm.median,
        report.baseline_rmse_mm.median,
        report
            .acc_percent
            .map(|a| format!(", accuracy {a:.2}%"))
            .unwrap_or_default()
    );
    Ok(report)
}

fn spaced(n: usize, k: usize) -> Vec<usize> {
    if n <= k {
        return (0..n).collect();
    }
    (0..k).map(|i| i * (n - 1) / (k - 1)).collect()
}

/// Writes `<sentence>.svg` and `<sentence>.csv` overlays into `out`.
pub fn cmd_plot(args: &PlotArgs) -> Result<PathBuf> {
    let scale = PixelScale::new(args.mm_per_pixel)?;
    let l = load(&args.dataset, &args.checkpoint, args.ae_checkpoint.as_deref())?;
    let s = l.ds.load_sentence(&args.sentence)?;
    let p = predict(&l, &s)?;
    let n = p.truth.len();
    let frames = if args.frames.is_empty() {
        spaced(n, DEFAULT_PANELS)
    } else {
        args.frames.clone()
    };
    if let Some(&bad) = frames.iter().find(|&&j| j >= n) {
        return Err(AaiError::OutOfRange(format!("frame {bad} of a {n}-frame sentence")));
    }
    let panels = frames
        .iter()
        .map(|&j| {
            Ok(OverlayFrame {
                frame: j,
                rmse_mm: frame_rmse(&p.pred[j], &p.truth[j], scale)?,
                truth: p.truth[j].clone(),
                pred: p.pred[j].clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ensure_dir(&args.out)?;
    let title = format!(
        "{} ({}, W = {})",
        s.id,
        l.model.spec().variant.tag(),
        l.model.spec().context.window_frames()
    );
    let svg_path = args.out.join(format!("{}.svg", s.id));
    write_text(&svg_path, &overlay_svg(&title, &panels)?)?;
    write_text(&args.out.join(format!("{}.csv", s.id)), &overlay_csv(&panels))?;
    Ok(svg_path)
}
