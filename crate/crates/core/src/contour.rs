//! Shared domain types: tongue contours, feature frames, phoneme labels,
//! segment intervals, acquisitions and the pixel-to-millimetre scale.

use serde::{Deserialize, Serialize};

use crate::error::{AaiError, Result};

/// Points per tracked tongue contour.
pub const CONTOUR_POINTS: usize = 50;
/// Flattened contour length: all X then all Y.
pub const CONTOUR_DIM: usize = 2 * CONTOUR_POINTS;
/// Side of the square MRI frame in pixels.
pub const IMAGE_SIZE_PX: f64 = 136.0;
/// Size of the phoneme inventory.
pub const N_PHONEMES: usize = 43;
/// MFCC + delta + delta-delta.
pub const FEATURE_DIM: usize = 39;
pub const N_MFCC: usize = 13;

/// 2.21 mm per 1.37 px.
pub const DEFAULT_MM_PER_PIXEL: f64 = 1.6131;

/// A tongue contour traced from root to sublingual cavity, in pixel units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TongueContour {
    points: Vec<[f64; 2]>,
    pub timestamp_s: f64,
}

impl TongueContour {
    pub fn new(points: Vec<[f64; 2]>, timestamp_s: f64) -> Result<Self> {
        if points.len() != CONTOUR_POINTS {
            return Err(AaiError::Shape(format!(
                "contour has {} points, expected {CONTOUR_POINTS}",
                points.len()
            )));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) || !timestamp_s.is_finite() {
            return Err(AaiError::InvalidValue("non-finite contour coordinate".into()));
        }
        Ok(Self { points, timestamp_s })
    }

    /// Inverse of [`flatten_contour`].
    pub fn from_flat(flat: &[f64], timestamp_s: f64) -> Result<Self> {
        if flat.len() != CONTOUR_DIM {
            return Err(AaiError::Shape(format!(
                "flattened contour has length {}, expected {CONTOUR_DIM}",
                flat.len()
            )));
        }
        let points = (0..CONTOUR_POINTS)
            .map(|i| [flat[i], flat[CONTOUR_POINTS + i]])
            .collect();
        Self::new(points, timestamp_s)
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn within_image(&self) -> bool {
        self.points
            .iter()
            .flatten()
            .all(|&v| (0.0..=IMAGE_SIZE_PX).contains(&v))
    }
}

/// Lays a contour out as `[x0..x49, y0..y49]`.
pub fn flatten_contour(c: &TongueContour) -> Vec<f64> {
    let mut out = Vec::with_capacity(CONTOUR_DIM);
    out.extend(c.points.iter().map(|p| p[0]));
    out.extend(c.points.iter().map(|p| p[1]));
    out
}

/// One 39-dimensional acoustic frame on the 10 ms grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    pub mfcc: [f64; N_MFCC],
    pub delta: [f64; N_MFCC],
    pub delta2: [f64; N_MFCC],
    pub t_s: f64,
}

impl FeatureFrame {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(FEATURE_DIM);
        v.extend_from_slice(&self.mfcc);
        v.extend_from_slice(&self.delta);
        v.extend_from_slice(&self.delta2);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhonemeLabel {
    index: u8,
    pub is_silence: bool,
}

impl PhonemeLabel {
    pub fn new(index: usize, is_silence: bool) -> Result<Self> {
        if index >= N_PHONEMES {
            return Err(AaiError::OutOfRange(format!(
                "phoneme index {index} outside [0, {}]",
                N_PHONEMES - 1
            )));
        }
        Ok(Self {
            index: index as u8,
            is_silence,
        })
    }

    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn one_hot(&self) -> [f64; N_PHONEMES] {
        let mut v = [0.0; N_PHONEMES];
        v[self.index()] = 1.0;
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentInterval {
    pub start_s: f64,
    pub end_s: f64,
    pub label: PhonemeLabel,
    /// Marks a silence lying between two utterances.
    pub inter: bool,
}

impl SegmentInterval {
    pub fn new(start_s: f64, end_s: f64, label: PhonemeLabel, inter: bool) -> Result<Self> {
        if !(start_s.is_finite() && end_s.is_finite()) || start_s >= end_s {
            return Err(AaiError::InvalidValue(format!(
                "segment [{start_s}, {end_s}) is empty or non-finite"
            )));
        }
        Ok(Self {
            start_s,
            end_s,
            label,
            inter,
        })
    }

    pub fn contains(&self, t_s: f64) -> bool {
        self.start_s <= t_s && t_s < self.end_s
    }
}

/// Checks that segments are sorted and non-overlapping.
pub fn validate_segments(segments: &[SegmentInterval]) -> Result<()> {
    for w in segments.windows(2) {
        if w[1].start_s < w[0].end_s {
            return Err(AaiError::InvalidValue(format!(
                "segments overlap or are unsorted at {} s",
                w[1].start_s
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Audio {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl Audio {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// One recording session.
#[derive(Debug, Clone)]
pub struct Acquisition {
    pub id: String,
    pub audio: Audio,
    pub contours: Vec<TongueContour>,
    pub segments: Vec<SegmentInterval>,
}

impl Acquisition {
    pub fn new(id: String, audio: Audio, contours: Vec<TongueContour>, segments: Vec<SegmentInterval>) -> Result<Self> {
        if contours.windows(2).any(|w| w[1].timestamp_s <= w[0].timestamp_s) {
            return Err(AaiError::InvalidValue(format!(
                "{id}: contour timestamps are not strictly increasing"
            )));
        }
        validate_segments(&segments)?;
        // half a sample of slack for segment ends written with rounding
        let slack = 0.5 / audio.sample_rate_hz as f64;
        if let (Some(first), Some(last)) = (segments.first(), segments.last()) {
            if first.start_s < -slack || last.end_s > audio.duration_s() + slack {
                return Err(AaiError::OutOfRange(format!(
                    "{id}: segmentation [{}, {}] exceeds audio duration {}",
                    first.start_s,
                    last.end_s,
                    audio.duration_s()
                )));
            }
        }
        Ok(Self {
            id,
            audio,
            contours,
            segments,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelScale {
    mm_per_pixel: f64,
}

impl PixelScale {
    pub fn new(mm_per_pixel: f64) -> Result<Self> {
        if !(mm_per_pixel.is_finite() && mm_per_pixel > 0.0) {
            return Err(AaiError::InvalidValue(format!(
                "mm_per_pixel must be positive, got {mm_per_pixel}"
            )));
        }
        Ok(Self { mm_per_pixel })
    }

    pub fn mm_per_pixel(&self) -> f64 {
        self.mm_per_pixel
    }
}

impl Default for PixelScale {
    fn default() -> Self {
        Self {
            mm_per_pixel: DEFAULT_MM_PER_PIXEL,
        }
    }
}

pub fn px_to_mm(v: f64, scale: PixelScale) -> Result<f64> {
    if !v.is_finite() {
        return Err(AaiError::InvalidValue(format!("length {v} is not finite")));
    }
    Ok(v * scale.mm_per_pixel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn contour_from(f: impl Fn(usize) -> [f64; 2]) -> TongueContour {
        TongueContour::new((0..CONTOUR_POINTS).map(f).collect(), 0.0).unwrap()
    }

    #[test]
    fn px_to_mm_examples() {
        let s = PixelScale::default();
        assert!((px_to_mm(1.37, s).unwrap() - 2.2099).abs() < 1e-4);
        assert_eq!(px_to_mm(0.0, s).unwrap(), 0.0);
        assert_eq!(px_to_mm(1.0, PixelScale::new(1.0).unwrap()).unwrap(), 1.0);
        assert!(px_to_mm(f64::NAN, s).is_err());
        assert!(PixelScale::new(0.0).is_err());
        assert!(PixelScale::new(-1.0).is_err());
    }

    #[test]
    fn flatten_constant_contour() {
        let c = contour_from(|_| [3.0, 7.0]);
        let v = flatten_contour(&c);
        assert!(v[..50].iter().all(|&x| x == 3.0));
        assert!(v[50..].iter().all(|&y| y == 7.0));
    }

    #[test]
    fn flatten_layout_is_x_block_then_y_block() {
        // points (1,2), (3,4), (5,6), ...
        let c = contour_from(|i| [(2 * i + 1) as f64, (2 * i + 2) as f64]);
        let v = flatten_contour(&c);
        assert_eq!(&v[..3], &[1.0, 3.0, 5.0]);
        assert_eq!(&v[50..53], &[2.0, 4.0, 6.0]);
        assert_eq!(v.len(), CONTOUR_DIM);
    }

    #[test]
    fn wrong_point_count_is_shape_error() {
        assert!(matches!(
            TongueContour::new(vec![[0.0, 0.0]; 49], 0.0),
            Err(AaiError::Shape(_))
        ));
        assert!(matches!(
            TongueContour::from_flat(&[0.0; 99], 0.0),
            Err(AaiError::Shape(_))
        ));
    }

    #[test]
    fn one_hot_sums_to_one() {
        for i in 0..N_PHONEMES {
            let l = PhonemeLabel::new(i, i == 0).unwrap();
            assert_eq!(l.one_hot().iter().sum::<f64>(), 1.0);
        }
        assert!(PhonemeLabel::new(43, false).is_err());
    }

    #[test]
    fn acquisition_rejects_bad_ordering() {
        let audio = Audio {
            samples: vec![0.0; 16000],
            sample_rate_hz: 16000,
        };
        let c0 = contour_from(|_| [1.0, 1.0]);
        let mut c1 = c0.clone();
        c1.timestamp_s = 0.0;
        assert!(Acquisition::new("a".into(), audio.clone(), vec![c0, c1], vec![]).is_err());
        let sil = PhonemeLabel::new(0, true).unwrap();
        let seg = SegmentInterval::new(0.0, 2.0, sil, false).unwrap();
        assert!(Acquisition::new("a".into(), audio, vec![], vec![seg]).is_err());
    }

    proptest! {
        #[test]
        fn flatten_round_trip_is_exact(coords in proptest::collection::vec(-1e6f64..1e6, CONTOUR_DIM)) {
            let c = TongueContour::from_flat(&coords, 0.5).unwrap();
            let back = TongueContour::from_flat(&flatten_contour(&c), 0.5).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(flatten_contour(&back), coords);
        }

        #[test]
        fn px_to_mm_is_linear(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let s = PixelScale::default();
            let lhs = px_to_mm(a + b, s).unwrap();
            let rhs = px_to_mm(a, s).unwrap() + px_to_mm(b, s).unwrap();
            // ulp-level agreement, measured against the operands' magnitude
            let tol = 2.0 * f64::EPSILON * (a.abs() + b.abs()) * s.mm_per_pixel();
            prop_assert!((lhs - rhs).abs() <= tol);
        }
    }
}
