use std::ops::Range;

use crate::contour::{SegmentInterval, TongueContour};
use crate::error::{AaiError, Result};

/// Linear interpolation of contours onto grid timestamps.
pub fn interpolate_contours(contours: &[TongueContour], grid: &[f64]) -> Result<Vec<TongueContour>> {
    if contours.len() < 2 {
        return Err(AaiError::TooSmall(format!(
            "interpolation needs at least 2 contours, got {}",
            contours.len()
        )));
    }
    let (t0, t1) = (contours[0].timestamp_s, contours[contours.len() - 1].timestamp_s);
    grid.iter()
        .map(|&t| {
            if !(t0..=t1).contains(&t) {
                return Err(AaiError::OutOfRange(format!(
                    "grid time {t} s outside contour span [{t0}, {t1}]"
                )));
            }
            // first contour strictly after t, so that t_i <= t < t_{i+1}
            let hi = contours.partition_point(|c| c.timestamp_s <= t);
            if hi == contours.len() {
                let last = &contours[hi - 1];
                return TongueContour::new(last.points().to_vec(), t);
            }
            let (a, b) = (&contours[hi - 1], &contours[hi]);
            let lambda = (t - a.timestamp_s) / (b.timestamp_s - a.timestamp_s);
            let points = a
                .points()
                .iter()
                .zip(b.points())
                .map(|(p, q)| {
                    [
                        (1.0 - lambda) * p[0] + lambda * q[0],
                        (1.0 - lambda) * p[1] + lambda * q[1],
                    ]
                })
                .collect();
            TongueContour::new(points, t)
        })
        .collect()
}

/// Index of the segment containing each frame time.
pub fn assign_segments(frame_times: &[f64], segments: &[SegmentInterval]) -> Result<Vec<usize>> {
    frame_times
        .iter()
        .map(|&t| {
            let i = segments.partition_point(|s| s.start_s <= t);
            match i.checked_sub(1) {
                Some(k) if segments[k].contains(t) => Ok(k),
                _ => Err(AaiError::Coverage { t_s: t }),
            }
        })
        .collect()
}

/// Segments that belong to a sentence boundary: every maximal run of
/// silence segments that carries an inter flag or touches either end of the
/// acquisition.
pub fn boundary_segments(segments: &[SegmentInterval]) -> Vec<bool> {
    let mut out = vec![false; segments.len()];
    let mut i = 0;
    while i < segments.len() {
        if !segments[i].label.is_silence {
            i += 1;
            continue;
        }
        let start = i;
        while i < segments.len() && segments[i].label.is_silence {
            i += 1;
        }
        let run = start..i;
        let is_boundary = run.start == 0 || run.end == segments.len() || segments[run.clone()].iter().any(|s| s.inter);
        if is_boundary {
            out[run].iter_mut().for_each(|b| *b = true);
        }
    }
    out
}

/// One sentence as a range of frame indices plus the per-frame segment index.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceSpan {
    pub frames: Range<usize>,
    pub segments: Vec<usize>,
}

/// Splits the frame sequence into sentences, discarding boundary silences
/// and keeping silences inside a sentence.
pub fn filter_silences(frame_times: &[f64], segments: &[SegmentInterval]) -> Result<Vec<SentenceSpan>> {
    let seg_of = assign_segments(frame_times, segments)?;
    let boundary = boundary_segments(segments);
    let mut out = Vec::new();
    let mut current: Option<SentenceSpan> = None;
    for (j, &k) in seg_of.iter().enumerate() {
        if boundary[k] {
            out.extend(current.take());
            continue;
        }
        // a new sentence also starts when the segment sequence skips a boundary
        // that had no frame on the grid
        if let Some(cur) = &current {
            let prev = *cur.segments.last().expect("non-empty span");
            if (prev + 1..k).any(|m| boundary[m]) {
                out.extend(current.take());
            }
        }
        let cur = current.get_or_insert_with(|| SentenceSpan {
            frames: j..j,
            segments: Vec::new(),
        });
        cur.frames.end = j + 1;
        cur.segments.push(k);
    }
    out.extend(current);
    Ok(out)
}
