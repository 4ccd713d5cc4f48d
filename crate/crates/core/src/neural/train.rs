use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    clip_grad_norm, grad_norm, AdamConfig, AdamState, BatchLayout, EarlyStopper, Param, StopDecision, Tensor2,
};
use crate::error::{AaiError, Result};

/// One sentence: per-frame inputs, regression targets and optional class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceExample {
    pub features: Tensor2,
    pub targets: Tensor2,
    pub labels: Option<Vec<usize>>,
}

impl SequenceExample {
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Padded, time-major batch of sequences.
#[derive(Debug, Clone)]
pub struct Batch {
    pub layout: BatchLayout,
    pub features: Tensor2,
    pub targets: Tensor2,
    pub labels: Option<Vec<usize>>,
    pub mask: Vec<f64>,
}

impl Batch {
    pub fn from_examples(examples: &[&SequenceExample]) -> Result<Self> {
        let steps = examples.iter().map(|e| e.len()).max().unwrap_or(0);
        Self::padded(examples, steps)
    }

    /// Like [`Batch::from_examples`] but padded to `steps` time steps.
    pub fn padded(examples: &[&SequenceExample], steps: usize) -> Result<Self> {
        if examples.is_empty() {
            return Err(AaiError::EmptyInput("empty batch".into()));
        }
        for e in examples {
            if e.targets.rows() != e.len() || e.labels.as_ref().is_some_and(|l| l.len() != e.len()) {
                return Err(AaiError::Shape(
                    "targets or labels differ in length from features".into(),
                ));
            }
        }
        let layout = BatchLayout::with_steps(examples.iter().map(|e| e.len()).collect(), steps)?;
        let features = layout.pack(&examples.iter().map(|e| &e.features).collect::<Vec<_>>())?;
        let targets = layout.pack(&examples.iter().map(|e| &e.targets).collect::<Vec<_>>())?;
        let labels = match examples.iter().map(|e| e.labels.as_ref()).collect::<Option<Vec<_>>>() {
            Some(all) => {
                let mut out = vec![0; layout.rows()];
                for (b, l) in all.iter().enumerate() {
                    for (t, &v) in l.iter().enumerate() {
                        out[layout.row(t, b)] = v;
                    }
                }
                Some(out)
            }
            None => None,
        };
        let mask = layout.row_mask();
        Ok(Self {
            layout,
            features,
            targets,
            labels,
            mask,
        })
    }

    pub fn valid_frames(&self) -> usize {
        self.layout.valid_rows()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub mse: f64,
    pub ce: Option<f64>,
    pub total: f64,
}

/// A sequence model trainable by [`train_loop`].
pub trait SeqModel: Clone {
    /// Forward + backward on one batch; gradients are accumulated into params.
    fn loss_and_grad(&mut self, batch: &Batch, alpha: f64) -> Result<LossParts>;
    /// Forward-only loss.
    fn loss(&self, batch: &Batch, alpha: f64) -> Result<LossParts>;
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub seed: u64,
    pub alpha: f64,
    pub adam: AdamConfig,
    /// Global gradient-norm cap; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 10,
            patience: 5,
            seed: 0,
            alpha: 1.0,
            adam: AdamConfig::default(),
            clip_norm: Some(5.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: LossParts,
    pub val: LossParts,
    pub improved: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    /// Parameters from the epoch with the lowest validation loss.
    pub best: M,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    pub stopped_early: bool,
}

/// Training stopped on an error; carries the best model seen so far.
#[derive(Debug)]
pub struct TrainAbort<M> {
    pub error: AaiError,
    pub last_good: Option<M>,
    pub history: Vec<EpochRecord>,
}

impl<M> From<TrainAbort<M>> for AaiError {
    fn from(a: TrainAbort<M>) -> Self {
        a.error
    }
}

fn accumulate(acc: &mut (f64, f64, Option<f64>), parts: LossParts, frames: usize) {
    let w = frames as f64;
    acc.0 += w;
    acc.1 += w * parts.mse;
    if let Some(ce) = parts.ce {
        *acc.2.get_or_insert(0.0) += w * ce;
    }
}

fn finish(acc: (f64, f64, Option<f64>), alpha: f64) -> LossParts {
    let mse = acc.1 / acc.0;
    let ce = acc.2.map(|c| c / acc.0);
    LossParts {
        mse,
        ce,
        total: mse + alpha * ce.unwrap_or(0.0),
    }
}

/// Frame-weighted loss over `examples`, evaluated in fixed-order batches.
pub fn evaluate_loss<M: SeqModel>(
    model: &M,
    examples: &[SequenceExample],
    batch_size: usize,
    alpha: f64,
) -> Result<LossParts> {
    if examples.is_empty() {
        return Err(AaiError::EmptyInput("no examples to evaluate".into()));
    }
    let mut acc = (0.0, 0.0, None);
    for chunk in examples.chunks(batch_size.max(1)) {
        let batch = Batch::from_examples(&chunk.iter().collect::<Vec<_>>())?;
        accumulate(&mut acc, model.loss(&batch, alpha)?, batch.valid_frames());
    }
    Ok(finish(acc, alpha))
}

/// Mini-batch Adam over shuffled sentences with early stopping on the
/// validation loss; returns the best-validation parameters.
pub fn train_loop<M: SeqModel>(
    mut model: M,
    train: &[SequenceExample],
    val: &[SequenceExample],
    cfg: &TrainConfig,
) -> std::result::Result<TrainOutcome<M>, TrainAbort<M>> {
    let abort = |error, last_good, history| TrainAbort {
        error,
        last_good,
        history,
    };
    if train.is_empty() || val.is_empty() {
        return Err(abort(
            AaiError::EmptyInput("training and validation sets must be non-empty".into()),
            None,
            vec![],
        ));
    }
    if cfg.batch_size == 0 {
        return Err(abort(AaiError::Config("batch size must be >= 1".into()), None, vec![]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(cfg.adam, model.params());
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut best: Option<(M, usize)> = None;
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut stopped_early = false;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut acc = (0.0, 0.0, None);
        for chunk in order.chunks(cfg.batch_size) {
            let step = (|| -> Result<(LossParts, usize)> {
                let batch = Batch::from_examples(&chunk.iter().map(|&i| &train[i]).collect::<Vec<_>>())?;
                model.zero_grad();
                let parts = model.loss_and_grad(&batch, cfg.alpha)?;
                if !parts.total.is_finite() {
                    return Err(AaiError::Diverged {
                        epoch,
                        msg: format!("training loss is {}", parts.total),
                    });
                }
                let mut params = model.params_mut();
                let norm = match cfg.clip_norm {
                    Some(max) => clip_grad_norm(&mut params, max),
                    None => grad_norm(params.iter().map(|p| &**p)),
                };
                if !norm.is_finite() {
                    return Err(AaiError::Diverged {
                        epoch,
                        msg: "gradient norm is not finite".into(),
                    });
                }
                adam.step(&mut params)?;
                Ok((parts, batch.valid_frames()))
            })();
            match step {
                Ok((parts, frames)) => accumulate(&mut acc, parts, frames),
                Err(e) => return Err(abort(e, best.map(|b| b.0), history)),
            }
        }
        let train_parts = finish(acc, cfg.alpha);
        let val_parts = match evaluate_loss(&model, val, cfg.batch_size, cfg.alpha) {
            Ok(v) if v.total.is_finite() => v,
            Ok(v) => {
                let e = AaiError::Diverged {
                    epoch,
                    msg: format!("validation loss is {}", v.total),
                };
                return Err(abort(e, best.map(|b| b.0), history));
            }
            Err(e) => return Err(abort(e, best.map(|b| b.0), history)),
        };
        let decision = stopper.observe(val_parts.total);
        let improved = decision == StopDecision::Improved;
        if improved {
            best = Some((model.clone(), epoch));
        }
        log::info!(
            "epoch {epoch}: train {:.6} val {:.6}{}",
            train_parts.total,
            val_parts.total,
            if improved { " *" } else { "" }
        );
        history.push(EpochRecord {
            epoch,
            train: train_parts,
            val: val_parts,
            improved,
        });
        if decision == StopDecision::Stop {
            stopped_early = true;
            break;
        }
    }
    let (best, best_epoch) = best.unwrap_or((model, 0));
    Ok(TrainOutcome {
        best,
        best_epoch,
        history,
        stopped_early,
    })
}
