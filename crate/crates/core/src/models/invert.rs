use super::{InversionModel, LATENT_DIM};
use crate::contour::{TongueContour, CONTOUR_DIM};
use crate::dsp::{DimStats, DspConfig};
use crate::error::{AaiError, Result};
use crate::neural::{softmax, BatchLayout, Tensor2};

/// Maps latent vectors back to normalized contours.
pub trait ContourDecoder {
    fn latent_dim(&self) -> usize;
    fn decode(&self, latent: &Tensor2) -> Result<Tensor2>;
}

#[derive(Debug, Clone)]
pub struct Inversion {
    /// Predicted contours in pixels, one per frame.
    pub contours: Vec<TongueContour>,
    /// Frame-by-43 phoneme posteriors for multi-task variants.
    pub posteriors: Option<Tensor2>,
}

/// Runs one sentence through the model and, for latent variants, the decoder.
/// Returns normalized 100-dim contours and optional posteriors.
pub fn predict_normalized(
    model: &InversionModel,
    features: &Tensor2,
    decoder: Option<&dyn ContourDecoder>,
) -> Result<(Tensor2, Option<Tensor2>)> {
    let layout = BatchLayout::single(features.rows())?;
    let out = model.forward(features, &layout)?;
    let posteriors = out.phoneme_logits.as_ref().map(softmax);
    let contours = if model.spec().variant.uses_autoencoder() {
        let dec = decoder.ok_or_else(|| {
            AaiError::Config(format!(
                "{} model needs an autoencoder to decode",
                model.spec().variant.tag()
            ))
        })?;
        if dec.latent_dim() != LATENT_DIM {
            return Err(AaiError::Shape(format!(
                "decoder takes {}-dim latents, head gives {LATENT_DIM}",
                dec.latent_dim()
            )));
        }
        dec.decode(&out.regression)?
    } else {
        out.regression
    };
    if contours.cols() != CONTOUR_DIM {
        return Err(AaiError::Shape(format!(
            "decoded contours have {} dims",
            contours.cols()
        )));
    }
    Ok((contours, posteriors))
}

/// Predicts pixel-space contours for one sentence of stacked features.
/// Timestamps are frame centres relative to the first frame's window.
pub fn invert(
    model: &InversionModel,
    features: &Tensor2,
    stats: &DimStats,
    decoder: Option<&dyn ContourDecoder>,
) -> Result<Inversion> {
    if stats.dim() != CONTOUR_DIM {
        return Err(AaiError::Shape(format!("contour stats have {} dims", stats.dim())));
    }
    let (normalized, posteriors) = predict_normalized(model, features, decoder)?;
    let dsp = DspConfig::default();
    let contours = (0..normalized.rows())
        .map(|j| TongueContour::from_flat(&stats.denormalize_row(normalized.row(j))?, dsp.frame_center_s(j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Inversion { contours, posteriors })
}
