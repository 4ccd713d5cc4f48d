//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes and returns plain numbers or `Float64Array`s so the
//! page needs no glue beyond what wasm-bindgen generates.

use aai_core::contour::{flatten_contour, px_to_mm, PixelScale, TongueContour, CONTOUR_DIM};
use aai_core::corpus::interpolate_contours;
use aai_core::dsp::{compute_mfcc, DspConfig};
use aai_core::eval::flat_rmse_px;
use aai_core::synth::{contour_from_latent, static_audio, SynthConfig, N_LATENT, SAMPLE_RATE_HZ};
use wasm_bindgen::prelude::*;

fn latent(p0: f64, p1: f64, p2: f64, p3: f64) -> Result<[f64; N_LATENT], String> {
    let p = [p0, p1, p2, p3];
    if p.iter().any(|v| !(-1.0..=1.0).contains(v)) {
        return Err("articulator parameters must lie in [-1, 1]".into());
    }
    Ok(p)
}

/// Synthetic tongue contour for four articulator parameters in `[-1, 1]`:
/// 50 x values followed by 50 y values, in pixels.
#[wasm_bindgen]
pub fn contour(p0: f64, p1: f64, p2: f64, p3: f64) -> Result<Vec<f64>, String> {
    Ok(contour_from_latent(&SynthConfig::default(), &latent(p0, p1, p2, p3)?))
}

/// Mean 13-coefficient cepstrum of 0.1 s of the synthetic voice held at the
/// given articulator parameters.
#[wasm_bindgen]
pub fn mfcc(p0: f64, p1: f64, p2: f64, p3: f64) -> Result<Vec<f64>, String> {
    let audio = static_audio(&latent(p0, p1, p2, p3)?, 0.1);
    let frames = compute_mfcc(&audio, SAMPLE_RATE_HZ, &DspConfig::default()).map_err(|e| e.to_string())?;
    let n = frames.len() as f64;
    Ok((0..frames[0].len())
        .map(|k| frames.iter().map(|f| f[k]).sum::<f64>() / n)
        .collect())
}

/// Coordinate RMSE in millimetres between a contour and a copy shifted by
/// `(dx, dy)` pixels.
#[wasm_bindgen]
pub fn offset_rmse_mm(flat: &[f64], dx: f64, dy: f64, mm_per_pixel: f64) -> Result<f64, String> {
    if flat.len() != CONTOUR_DIM {
        return Err(format!("expected {CONTOUR_DIM} values, got {}", flat.len()));
    }
    let half = CONTOUR_DIM / 2;
    let moved: Vec<f64> = flat
        .iter()
        .enumerate()
        .map(|(i, v)| v + if i < half { dx } else { dy })
        .collect();
    let scale = PixelScale::new(mm_per_pixel).map_err(|e| e.to_string())?;
    px_to_mm(flat_rmse_px(flat, &moved), scale).map_err(|e| e.to_string())
}

/// Contour at fraction `lambda` of the way from contour `a` to contour `b`,
/// as the aligner would produce between two MRI frames.
#[wasm_bindgen]
pub fn interpolate(a: &[f64], b: &[f64], lambda: f64) -> Result<Vec<f64>, String> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err("lambda must lie in [0, 1]".into());
    }
    let err = |e: aai_core::AaiError| e.to_string();
    let ends = [
        TongueContour::from_flat(a, 0.0).map_err(err)?,
        TongueContour::from_flat(b, 1.0).map_err(err)?,
    ];
    let out = interpolate_contours(&ends, &[lambda]).map_err(err)?;
    Ok(flatten_contour(&out[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_position_is_the_base_contour() {
        let c = contour(0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(c, SynthConfig::default().base_contour);
        assert!(contour(1.5, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn mfcc_changes_with_the_tongue() {
        let a = mfcc(0.0, 0.0, 0.0, 0.0).unwrap();
        let b = mfcc(0.8, -0.5, 0.0, 0.0).unwrap();
        assert_eq!(a.len(), 13);
        assert!(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() > 0.1);
    }

    #[test]
    fn shift_rmse_matches_hand_value() {
        let c = contour(0.2, 0.1, -0.3, 0.4).unwrap();
        // x-only shift of 1 px moves half the coordinates: sqrt(1/2) px
        let mm = offset_rmse_mm(&c, 1.0, 0.0, 2.0).unwrap();
        assert!((mm - 2.0 * 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(offset_rmse_mm(&c, 0.0, 0.0, 1.6131).unwrap(), 0.0);
        assert!(offset_rmse_mm(&c[..10], 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn interpolation_ends_and_middle() {
        let a = contour(-0.5, 0.0, 0.0, 0.0).unwrap();
        let b = contour(0.5, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(interpolate(&a, &b, 0.0).unwrap(), a);
        let mid = interpolate(&a, &b, 0.5).unwrap();
        for i in 0..CONTOUR_DIM {
            assert!((mid[i] - 0.5 * (a[i] + b[i])).abs() < 1e-9);
        }
        assert!(interpolate(&a, &b, 1.5).is_err());
    }
}
