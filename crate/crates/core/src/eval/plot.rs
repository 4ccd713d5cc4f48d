use std::fmt::Write;

use crate::contour::{TongueContour, IMAGE_SIZE_PX};
use crate::error::{AaiError, Result};

const PANEL_PX: f64 = 272.0;
const COLUMNS: usize = 4;
const CAPTION_PX: f64 = 24.0;

/// One overlay panel: ground truth, prediction and their error.
#[derive(Debug, Clone)]
pub struct OverlayFrame {
    pub frame: usize,
    pub truth: TongueContour,
    pub pred: TongueContour,
    pub rmse_mm: f64,
}

fn polyline(c: &TongueContour, scale: f64, dx: f64, dy: f64) -> String {
    let mut s = String::new();
    for (i, p) in c.points().iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{:.3},{:.3}", dx + p[0] * scale, dy + p[1] * scale);
    }
    s
}

/// Grid of panels in image coordinates: truth solid blue, prediction dashed
/// red, RMSE in the caption.
pub fn overlay_svg(title: &str, frames: &[OverlayFrame]) -> Result<String> {
    if frames.is_empty() {
        return Err(AaiError::EmptyInput("no frames to plot".into()));
    }
    let cols = COLUMNS.min(frames.len());
    let rows = frames.len().div_ceil(cols);
    let (w, h) = (
        cols as f64 * PANEL_PX,
        rows as f64 * (PANEL_PX + CAPTION_PX) + CAPTION_PX,
    );
    let scale = PANEL_PX / IMAGE_SIZE_PX;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="6" y="17">{}</text>"#, escape(title));
    for (k, f) in frames.iter().enumerate() {
        let dx = (k % cols) as f64 * PANEL_PX;
        let dy = CAPTION_PX + (k / cols) as f64 * (PANEL_PX + CAPTION_PX);
        let _ = writeln!(
            s,
            r##"<rect x="{dx}" y="{dy}" width="{PANEL_PX}" height="{PANEL_PX}" fill="#f4f4f4" stroke="#ccc"/>"##
        );
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="blue" stroke-width="2"/>"#,
            polyline(&f.truth, scale, dx, dy)
        );
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="red" stroke-width="2" stroke-dasharray="6 4"/>"#,
            polyline(&f.pred, scale, dx, dy)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">frame {} ({:.2} s): RMSE {:.2} mm</text>"#,
            dx + 6.0,
            dy + PANEL_PX + 16.0,
            f.frame,
            f.truth.timestamp_s,
            f.rmse_mm
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Point table behind the overlay, one row per contour point.
pub fn overlay_csv(frames: &[OverlayFrame]) -> String {
    let mut s = String::from("frame,t_s,point,truth_x,truth_y,pred_x,pred_y,rmse_mm\n");
    for f in frames {
        for (i, (t, p)) in f.truth.points().iter().zip(f.pred.points()).enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                f.frame, f.truth.timestamp_s, i, t[0], t[1], p[0], p[1], f.rmse_mm
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{PixelScale, CONTOUR_POINTS};
    use crate::eval::frame_rmse;

    fn frame(offset: f64) -> OverlayFrame {
        let truth = TongueContour::new((0..CONTOUR_POINTS).map(|i| [40.0 + i as f64, 60.0]).collect(), 0.5).unwrap();
        let pred = TongueContour::new(truth.points().iter().map(|p| [p[0] + offset, p[1]]).collect(), 0.5).unwrap();
        let rmse_mm = frame_rmse(&pred, &truth, PixelScale::default()).unwrap();
        OverlayFrame {
            frame: 3,
            truth,
            pred,
            rmse_mm,
        }
    }

    fn rows(csv: &str) -> Vec<Vec<f64>> {
        csv.lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect()
    }

    #[test]
    fn identical_contours_coincide() {
        for r in rows(&overlay_csv(&[frame(0.0)])) {
            assert_eq!((r[3], r[4]), (r[5], r[6]));
            assert_eq!(r[7], 0.0);
        }
    }

    #[test]
    fn offset_shows_up_in_the_csv() {
        for r in rows(&overlay_csv(&[frame(2.5)])) {
            assert!((r[5] - r[3] - 2.5).abs() < 1e-12);
            assert_eq!(r[6], r[4]);
        }
    }

    #[test]
    fn svg_has_both_styles_and_caption() {
        let svg = overlay_svg("s<1>", &[frame(1.0), frame(0.0)]).unwrap();
        assert!(svg.contains(r#"stroke="blue""#));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("RMSE 1.14 mm"));
        assert!(svg.contains("s&lt;1&gt;"));
        assert!(overlay_svg("x", &[]).is_err());
    }
}
