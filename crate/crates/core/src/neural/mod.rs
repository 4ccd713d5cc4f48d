//! Minimal neural engine for the inversion models: tensors, dense and
//! bidirectional LSTM layers with analytic gradients, losses, Adam, early
//! stopping, checkpoints and the training loop.

mod adam;
mod checkpoint;
mod dense;
mod early_stop;
mod layout;
mod loss;
mod lstm;
mod param;
mod tensor;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CheckpointHeader, NamedTensor, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use dense::{Activation, DenseLayer};
pub use early_stop::{EarlyStopper, StopDecision};
pub use layout::BatchLayout;
pub use loss::{combined_loss, cross_entropy, log_softmax, masked_mse, masked_softmax_cross_entropy, mse, softmax};
pub use lstm::{BiLstmLayer, LstmCell};
pub use param::{clip_grad_norm, grad_norm, Param};
pub use tensor::{gemm, MatRef, Tensor2};
pub use train::{
    evaluate_loss, train_loop, Batch, EpochRecord, LossParts, SeqModel, SequenceExample, TrainAbort, TrainConfig,
    TrainOutcome,
};
