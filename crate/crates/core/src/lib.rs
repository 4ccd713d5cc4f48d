//! Acoustic-to-articulatory inversion of full tongue contours.
//!
//! The crate goes from audio to MFCC features, aligns tracked contours to the
//! feature grid, trains Bi-LSTM regressors (optionally multi-task or through a
//! contour autoencoder) and scores predictions in millimetres.

pub mod contour;
pub mod corpus;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod models;
pub mod neural;
mod par;
pub mod pipeline;
pub mod synth;

pub use error::{AaiError, Result};
