//! Millimetre-scale contour errors, phoneme accuracy, reports and overlays.

mod metrics;
mod plot;
mod report;

pub use metrics::{
    argmax, flat_rmse_px, frame_error, frame_point_distance, frame_rmse, phoneme_accuracy, summarize, ErrorMetric,
    Summary,
};
pub use plot::{overlay_csv, overlay_svg, OverlayFrame};
pub use report::{frames_csv, EvalReport, FrameRecord, SplitCounts};
