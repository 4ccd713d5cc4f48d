//! End-to-end commands: prepare, train, evaluate, plot and synthesize.
//! The command-line front end is a thin layer over these.

mod eval;
mod train;

pub use eval::{cmd_eval, cmd_plot, EvalArgs, PlotArgs};
pub use train::{cmd_train, TrainArgs, TrainSummary, AE_CHECKPOINT, HISTORY_FILE, MODEL_CHECKPOINT};

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::corpus::{prepare_dataset, DatasetHeader, PrepConfig};
use crate::dsp::{ContextConfig, DspConfig};
use crate::error::{AaiError, Result};
use crate::models::{ContourAutoencoder, InversionModel};
use crate::neural::Checkpoint;
use crate::synth::{generate, SynthConfig};

pub const CONFIG_ECHO: &str = "config.json";
/// Context windows accepted on the command line.
pub const CONTEXT_CHOICES: [usize; 5] = [1, 3, 5, 7, 11];
pub const THREADS_ENV: &str = "AAI_THREADS";

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| AaiError::io(dir, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| AaiError::io(path, e))
}

/// Writes `config.json` into `out` with the validated run settings.
pub fn write_config_echo<T: Serialize>(out: &Path, config: &T) -> Result<()> {
    ensure_dir(out)?;
    let mut text = serde_json::to_string_pretty(config).map_err(|e| AaiError::Format(e.to_string()))?;
    text.push('\n');
    write_text(&out.join(CONFIG_ECHO), &text)
}

pub fn checked_context(w: usize) -> Result<ContextConfig> {
    if !CONTEXT_CHOICES.contains(&w) {
        return Err(AaiError::Config(format!(
            "context must be one of {CONTEXT_CHOICES:?}, got {w}"
        )));
    }
    ContextConfig::new(w)
}

pub fn cmd_prep(corpus_dir: &Path, out: &Path, context: usize, seed: u64) -> Result<DatasetHeader> {
    let cfg = PrepConfig {
        context: checked_context(context)?,
        seed,
        dsp: DspConfig::default(),
    };
    ensure_dir(out)?;
    let header = prepare_dataset(corpus_dir, out, &cfg)?;
    let c = &header.counts;
    log::info!(
        "prepared {} sentences from {} acquisitions: {} frames kept, {} silence, {} outside contours; split {}/{}/{}",
        c.sentences,
        c.acquisitions,
        c.frames_kept,
        c.frames_discarded_silence,
        c.frames_discarded_outside_contours,
        c.train_acquisitions,
        c.validation_acquisitions,
        c.test_acquisitions
    );
    Ok(header)
}

pub fn cmd_synth(cfg: &SynthConfig, out: &Path) -> Result<()> {
    let corpus = generate(cfg, out)?;
    log::info!(
        "wrote {} synthetic acquisitions to {}",
        corpus.acquisitions.len(),
        out.display()
    );
    Ok(())
}

pub fn load_model(path: &Path) -> Result<InversionModel> {
    InversionModel::from_checkpoint(&Checkpoint::load(path)?)
}

pub fn load_autoencoder(path: &Path) -> Result<ContourAutoencoder> {
    ContourAutoencoder::from_checkpoint(&Checkpoint::load(path)?)
}

/// Explicit autoencoder path, else `autoencoder.ckpt` next to the model.
pub(crate) fn autoencoder_path(model_path: &Path, explicit: Option<&Path>) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| {
        model_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(AE_CHECKPOINT)
    })
}

/// Caps the worker pool from `AAI_THREADS`; a no-op without the parallel feature.
pub fn init_threads_from_env() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| AaiError::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    #[cfg(feature = "parallel")]
    {
        // a second initialization (tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(Some(n))
}
