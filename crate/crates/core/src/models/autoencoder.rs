use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ContourDecoder, LATENT_DIM};
use crate::contour::CONTOUR_DIM;
use crate::error::{AaiError, Result};
use crate::neural::{
    masked_mse, train_loop, Activation, Batch, Checkpoint, CheckpointHeader, DenseLayer, LossParts, NamedTensor, Param,
    SeqModel, SequenceExample, Tensor2, TrainConfig, TrainOutcome,
};

pub const AE_ARCH_TAG: &str = "AE16";
pub const AE_HIDDEN: usize = 64;
const MIN_TRAIN_CONTOURS: usize = 100;

/// 100 → 64 → 16 → 64 → 100 autoencoder over normalized contours.
#[derive(Debug, Clone)]
pub struct ContourAutoencoder {
    seed: u64,
    enc1: DenseLayer,
    enc2: DenseLayer,
    dec1: DenseLayer,
    dec2: DenseLayer,
}

impl ContourAutoencoder {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            seed,
            enc1: DenseLayer::new("enc1", CONTOUR_DIM, AE_HIDDEN, Activation::Tanh, &mut rng),
            enc2: DenseLayer::new("enc2", AE_HIDDEN, LATENT_DIM, Activation::Identity, &mut rng),
            dec1: DenseLayer::new("dec1", LATENT_DIM, AE_HIDDEN, Activation::Tanh, &mut rng),
            dec2: DenseLayer::new("dec2", AE_HIDDEN, CONTOUR_DIM, Activation::Identity, &mut rng),
        }
    }

    pub fn encode(&self, contours: &Tensor2) -> Result<Tensor2> {
        self.enc2.forward(&self.enc1.forward(contours)?)
    }

    pub fn reconstruct(&self, contours: &Tensor2) -> Result<Tensor2> {
        self.decode(&self.encode(contours)?)
    }

    fn shape_table(&self) -> Vec<(String, usize, usize)> {
        self.params()
            .iter()
            .map(|p| (p.name.clone(), p.value.rows(), p.value.cols()))
            .collect()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            header: CheckpointHeader {
                arch_tag: AE_ARCH_TAG.into(),
                context: 0,
                alpha: 0.0,
                seed: self.seed,
                init: super::inversion::INIT_SCHEME.into(),
            },
            tensors: self
                .params()
                .into_iter()
                .map(|p| NamedTensor {
                    name: p.name.clone(),
                    value: p.value.clone(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.header.arch_tag != AE_ARCH_TAG {
            return Err(AaiError::Config(format!(
                "checkpoint holds {:?}, not an autoencoder",
                ckpt.header.arch_tag
            )));
        }
        let mut ae = Self::new(ckpt.header.seed);
        let values = ckpt.expect_tensors(&ae.shape_table())?;
        for (p, v) in ae.params_mut().into_iter().zip(values) {
            p.value = v.clone();
        }
        Ok(ae)
    }

    pub fn round_to_f32(&mut self) {
        self.params_mut().into_iter().for_each(|p| p.value.round_to_f32());
    }
}

impl ContourDecoder for ContourAutoencoder {
    fn latent_dim(&self) -> usize {
        LATENT_DIM
    }

    fn decode(&self, latent: &Tensor2) -> Result<Tensor2> {
        self.dec2.forward(&self.dec1.forward(latent)?)
    }
}

impl SeqModel for ContourAutoencoder {
    fn loss_and_grad(&mut self, batch: &Batch, _alpha: f64) -> Result<LossParts> {
        let z = self.enc1.forward_train(&batch.features)?;
        let z = self.enc2.forward_train(&z)?;
        let y = self.dec1.forward_train(&z)?;
        let y = self.dec2.forward_train(&y)?;
        let (mse, g) = masked_mse(&batch.targets, &y, &batch.mask)?;
        let g = self.dec2.backward(&g)?;
        let g = self.dec1.backward(&g)?;
        let g = self.enc2.backward(&g)?;
        self.enc1.backward(&g)?;
        Ok(LossParts {
            mse,
            ce: None,
            total: mse,
        })
    }

    fn loss(&self, batch: &Batch, _alpha: f64) -> Result<LossParts> {
        let (mse, _) = masked_mse(&batch.targets, &self.reconstruct(&batch.features)?, &batch.mask)?;
        Ok(LossParts {
            mse,
            ce: None,
            total: mse,
        })
    }

    fn params(&self) -> Vec<&Param> {
        let mut p = self.enc1.params();
        p.extend(self.enc2.params());
        p.extend(self.dec1.params());
        p.extend(self.dec2.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.enc1.params_mut();
        p.extend(self.enc2.params_mut());
        p.extend(self.dec1.params_mut());
        p.extend(self.dec2.params_mut());
        p
    }
}

fn as_examples(contours: &Tensor2) -> Vec<SequenceExample> {
    (0..contours.rows())
        .map(|r| {
            let row = Tensor2::from_vec(1, CONTOUR_DIM, contours.row(r).to_vec()).expect("row shape");
            SequenceExample {
                features: row.clone(),
                targets: row,
                labels: None,
            }
        })
        .collect()
}

/// Trains on normalized contours with reconstruction MSE; each contour is a
/// one-frame sequence so batching reuses the sequence trainer.
pub fn train_autoencoder(
    train: &Tensor2,
    val: &Tensor2,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<ContourAutoencoder>> {
    if train.cols() != CONTOUR_DIM || val.cols() != CONTOUR_DIM {
        return Err(AaiError::Shape(format!(
            "autoencoder expects {CONTOUR_DIM}-dim contours"
        )));
    }
    if train.rows() < MIN_TRAIN_CONTOURS {
        return Err(AaiError::TooSmall(format!(
            "autoencoder needs at least {MIN_TRAIN_CONTOURS} training contours, got {}",
            train.rows()
        )));
    }
    train.check_finite("autoencoder training contours")?;
    let first = train.row(0);
    if (1..train.rows()).all(|r| train.row(r) == first) {
        return Err(AaiError::InvalidValue("all training contours are identical".into()));
    }
    let model = ContourAutoencoder::new(cfg.seed);
    train_loop(model, &as_examples(train), &as_examples(val), cfg).map_err(AaiError::from)
}
