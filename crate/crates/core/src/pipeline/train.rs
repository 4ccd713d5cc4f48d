use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{autoencoder_path, ensure_dir, load_autoencoder, write_text};
use crate::corpus::{PreparedDataset, PreparedSentence, SplitName};
use crate::dsp::ContextConfig;
use crate::error::{AaiError, Result};
use crate::models::{train_autoencoder, ArchSpec, ContourAutoencoder, InversionModel, Variant};
use crate::neural::{AdamConfig, EpochRecord, SequenceExample, Tensor2, TrainConfig};

pub const MODEL_CHECKPOINT: &str = "model.ckpt";
pub const AE_CHECKPOINT: &str = "autoencoder.ckpt";
pub const HISTORY_FILE: &str = "history.csv";
pub const AE_HISTORY_FILE: &str = "ae_history.csv";
pub const TRAIN_SUMMARY_FILE: &str = "train.json";

/// Autoencoder schedule: mini-batches of 32 contours, patience 10.
const AE_BATCH: usize = 32;
const AE_PATIENCE: usize = 10;
const AE_EPOCHS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainArgs {
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub variant: Variant,
    /// Must match the dataset when given.
    pub context: Option<usize>,
    pub alpha: f64,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub patience: usize,
    pub seed: u64,
    pub train_ae: bool,
    pub ae_checkpoint: Option<PathBuf>,
    /// Trunk width and LSTM units; 300 unless overridden for quick runs.
    pub width: usize,
    pub hidden: usize,
}

impl TrainArgs {
    pub fn new(dataset: PathBuf, out: PathBuf, variant: Variant) -> Self {
        let d = TrainConfig::default();
        Self {
            dataset,
            out,
            variant,
            context: None,
            alpha: d.alpha,
            epochs: d.epochs,
            batch: d.batch_size,
            lr: d.adam.lr,
            patience: d.patience,
            seed: 0,
            train_ae: false,
            ae_checkpoint: None,
            width: crate::models::DEFAULT_WIDTH,
            hidden: crate::models::DEFAULT_HIDDEN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AaiError::Config(m));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if self.epochs == 0 || self.batch == 0 {
            return bad("epochs and batch must be >= 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if self.width == 0 || self.hidden == 0 {
            return bad("layer sizes must be positive".into());
        }
        if let Some(w) = self.context {
            super::checked_context(w)?;
        }
        Ok(())
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch,
            patience: self.patience,
            seed: self.seed,
            alpha: self.alpha,
            adam: AdamConfig {
                lr: self.lr,
                ..AdamConfig::default()
            },
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub arch: String,
    pub context: usize,
    pub parameters: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub train_frames: usize,
    pub val_frames: usize,
}

fn history_csv(history: &[EpochRecord]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut s = String::from("epoch,train_loss,train_mse,train_ce,val_loss,val_mse,val_ce,improved\n");
    for r in history {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.epoch,
            r.train.total,
            r.train.mse,
            opt(r.train.ce),
            r.val.total,
            r.val.mse,
            opt(r.val.ce),
            u8::from(r.improved)
        ));
    }
    s
}

fn stack_contours(sentences: &[PreparedSentence]) -> Result<Tensor2> {
    let rows: Vec<Vec<f64>> = sentences.iter().flat_map(|s| s.contours.to_rows()).collect();
    Tensor2::from_rows(&rows)
}

fn autoencoder_for(
    args: &TrainArgs,
    train: &[PreparedSentence],
    val: &[PreparedSentence],
) -> Result<ContourAutoencoder> {
    let path = autoencoder_path(&args.out.join(MODEL_CHECKPOINT), args.ae_checkpoint.as_deref());
    if args.train_ae {
        let cfg = TrainConfig {
            epochs: AE_EPOCHS,
            batch_size: AE_BATCH,
            patience: AE_PATIENCE,
            seed: args.seed,
            alpha: 0.0,
            adam: AdamConfig {
                lr: args.lr,
                ..AdamConfig::default()
            },
            ..TrainConfig::default()
        };
        let outcome = train_autoencoder(&stack_contours(train)?, &stack_contours(val)?, &cfg)?;
        write_text(&args.out.join(AE_HISTORY_FILE), &history_csv(&outcome.history))?;
        let mut ae = outcome.best;
        ae.round_to_f32();
        ae.to_checkpoint().save(&path)?;
        log::info!(
            "autoencoder trained for {} epochs, saved to {}",
            outcome.history.len(),
            path.display()
        );
        Ok(ae)
    } else if path.is_file() {
        load_autoencoder(&path)
    } else {
        Err(AaiError::Config(format!(
            "{} needs an autoencoder: pass --train-ae or provide {}",
            args.variant.tag(),
            path.display()
        )))
    }
}

fn examples(
    sentences: &[PreparedSentence],
    variant: Variant,
    ae: Option<&ContourAutoencoder>,
) -> Result<Vec<SequenceExample>> {
    sentences
        .iter()
        .map(|s| {
            let targets = match ae {
                Some(ae) => ae.encode(&s.contours)?,
                None => s.contours.clone(),
            };
            Ok(SequenceExample {
                features: s.features.clone(),
                targets,
                labels: variant.has_phoneme_head().then(|| s.labels.clone()),
            })
        })
        .collect()
}

/// Trains one architecture on a prepared dataset and writes the best
/// checkpoint and loss history. On divergence the last good checkpoint is
/// still written before the error is returned.
pub fn cmd_train(args: &TrainArgs) -> Result<TrainSummary> {
    args.validate()?;
    let ds = PreparedDataset::open(&args.dataset)?;
    let context = ds.context()?;
    if let Some(w) = args.context {
        if w != context.window_frames() {
            return Err(AaiError::Config(format!(
                "--context {w} does not match the dataset, which was prepared with W = {}",
                context.window_frames()
            )));
        }
    }
    ensure_dir(&args.out)?;
    let train = ds.load_split(SplitName::Train)?;
    let val = ds.load_split(SplitName::Validation)?;
    let ae = if args.variant.uses_autoencoder() {
        Some(autoencoder_for(args, &train, &val)?)
    } else {
        None
    };
    let train_ex = examples(&train, args.variant, ae.as_ref())?;
    let val_ex = examples(&val, args.variant, ae.as_ref())?;
    let spec =
        ArchSpec::new(args.variant, ContextConfig::new(context.window_frames())?).with_sizes(args.width, args.hidden);
    let mut model = InversionModel::build(spec, args.seed)?;
    model.alpha = args.alpha;
    let parameters = model.parameter_count();
    log::info!(
        "training {} (W = {}, {parameters} parameters) on {} sentences",
        args.variant.tag(),
        context.window_frames(),
        train_ex.len()
    );
    let ckpt_path = args.out.join(MODEL_CHECKPOINT);
    match crate::neural::train_loop(model, &train_ex, &val_ex, &args.train_config()) {
        Ok(outcome) => {
            write_text(&args.out.join(HISTORY_FILE), &history_csv(&outcome.history))?;
            let mut best = outcome.best;
            best.round_to_f32();
            best.to_checkpoint().save(&ckpt_path)?;
            let summary = TrainSummary {
                arch: args.variant.tag().into(),
                context: context.window_frames(),
                parameters,
                epochs_run: outcome.history.len(),
                best_epoch: outcome.best_epoch,
                best_val_loss: outcome
                    .history
                    .iter()
                    .find(|r| r.epoch == outcome.best_epoch)
                    .map_or(f64::NAN, |r| r.val.total),
                stopped_early: outcome.stopped_early,
                train_frames: train_ex.iter().map(|e| e.len()).sum(),
                val_frames: val_ex.iter().map(|e| e.len()).sum(),
            };
            let mut json = serde_json::to_string_pretty(&summary).map_err(|e| AaiError::Format(e.to_string()))?;
            json.push('\n');
            write_text(&args.out.join(TRAIN_SUMMARY_FILE), &json)?;
            Ok(summary)
        }
        Err(abort) => {
            write_text(&args.out.join(HISTORY_FILE), &history_csv(&abort.history))?;
            if let Some(mut good) = abort.last_good {
                good.round_to_f32();
                good.to_checkpoint().save(&ckpt_path)?;
                log::error!(
                    "training failed; last good checkpoint written to {}",
                    ckpt_path.display()
                );
            }
            Err(abort.error)
        }
    }
}
