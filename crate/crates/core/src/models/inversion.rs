use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ArchSpec, Variant};
use crate::contour::N_PHONEMES;
use crate::dsp::ContextConfig;
use crate::error::{AaiError, Result};
use crate::neural::{
    combined_loss, masked_mse, masked_softmax_cross_entropy, Activation, Batch, BatchLayout, BiLstmLayer, Checkpoint,
    CheckpointHeader, DenseLayer, LossParts, NamedTensor, Param, SeqModel, Tensor2,
};

pub(crate) const INIT_SCHEME: &str = "uniform(+-1/sqrt(fan_in)); bias 0; lstm forget bias 1";

#[derive(Debug, Clone)]
pub struct ModelOutput {
    /// Contour (100) or latent (16) regression per row.
    pub regression: Tensor2,
    /// Unnormalized phoneme scores for multi-task variants.
    pub phoneme_logits: Option<Tensor2>,
}

#[derive(Debug, Clone)]
pub struct InversionModel {
    spec: ArchSpec,
    seed: u64,
    /// Loss weight the model was (or will be) trained with; stored in checkpoints.
    pub alpha: f64,
    input: DenseLayer,
    lstm1: BiLstmLayer,
    lstm2: BiLstmLayer,
    dense1: DenseLayer,
    dense2: DenseLayer,
    head: DenseLayer,
    phoneme_head: Option<DenseLayer>,
}

impl InversionModel {
    /// Deterministic initialization from `seed`.
    pub fn build(spec: ArchSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (spec.width, spec.hidden);
        let input = DenseLayer::new("input", spec.input_dim(), w, Activation::Tanh, &mut rng);
        let lstm1 = BiLstmLayer::new("lstm1", w, h, &mut rng);
        let lstm2 = BiLstmLayer::new("lstm2", 2 * h, h, &mut rng);
        let dense1 = DenseLayer::new("dense1", 2 * h, w, Activation::Tanh, &mut rng);
        let dense2 = DenseLayer::new("dense2", w, w, Activation::Tanh, &mut rng);
        let head = DenseLayer::new("head", w, spec.variant.regression_dim(), Activation::Identity, &mut rng);
        let phoneme_head = spec
            .variant
            .has_phoneme_head()
            .then(|| DenseLayer::new("phoneme_head", w, N_PHONEMES, Activation::Identity, &mut rng));
        Ok(Self {
            spec,
            seed,
            alpha: 1.0,
            input,
            lstm1,
            lstm2,
            dense1,
            dense2,
            head,
            phoneme_head,
        })
    }

    pub fn spec(&self) -> &ArchSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn forward(&self, x: &Tensor2, layout: &BatchLayout) -> Result<ModelOutput> {
        if x.cols() != self.spec.input_dim() {
            return Err(AaiError::Shape(format!(
                "features have dimension {}, model with context {} expects {}",
                x.cols(),
                self.spec.context.window_frames(),
                self.spec.input_dim()
            )));
        }
        let a = self.input.forward(x)?;
        let a = self.lstm1.forward(&a, layout)?;
        let a = self.lstm2.forward(&a, layout)?;
        let a = self.dense1.forward(&a)?;
        let a = self.dense2.forward(&a)?;
        Ok(ModelOutput {
            regression: self.head.forward(&a)?,
            phoneme_logits: self.phoneme_head.as_ref().map(|h| h.forward(&a)).transpose()?,
        })
    }

    fn forward_train(&mut self, x: &Tensor2, layout: &BatchLayout) -> Result<ModelOutput> {
        if x.cols() != self.spec.input_dim() {
            return Err(AaiError::Shape(format!(
                "features have dimension {}, model expects {}",
                x.cols(),
                self.spec.input_dim()
            )));
        }
        let a = self.input.forward_train(x)?;
        let a = self.lstm1.forward_train(&a, layout)?;
        let a = self.lstm2.forward_train(&a, layout)?;
        let a = self.dense1.forward_train(&a)?;
        let a = self.dense2.forward_train(&a)?;
        Ok(ModelOutput {
            regression: self.head.forward_train(&a)?,
            phoneme_logits: match self.phoneme_head.as_mut() {
                Some(h) => Some(h.forward_train(&a)?),
                None => None,
            },
        })
    }

    fn backward(
        &mut self,
        d_regression: &Tensor2,
        d_logits: Option<&Tensor2>,
        layout: &BatchLayout,
    ) -> Result<Tensor2> {
        let mut g = self.head.backward(d_regression)?;
        if let (Some(h), Some(d)) = (self.phoneme_head.as_mut(), d_logits) {
            g.add_assign(&h.backward(d)?);
        }
        let g = self.dense2.backward(&g)?;
        let g = self.dense1.backward(&g)?;
        let g = self.lstm2.backward(&g, layout)?;
        let g = self.lstm1.backward(&g, layout)?;
        self.input.backward(&g)
    }

    fn batch_loss(
        &self,
        out: &ModelOutput,
        batch: &Batch,
        alpha: f64,
    ) -> Result<(LossParts, Tensor2, Option<Tensor2>)> {
        let (mse, d_reg) = masked_mse(&batch.targets, &out.regression, &batch.mask)?;
        let (ce, d_logits) = match &out.phoneme_logits {
            Some(logits) => {
                let labels = batch
                    .labels
                    .as_ref()
                    .ok_or_else(|| AaiError::Config("multi-task model needs phoneme labels".into()))?;
                let (ce, mut d) = masked_softmax_cross_entropy(logits, labels, &batch.mask)?;
                d.map_inplace(|g| g * alpha);
                (Some(ce), Some(d))
            }
            None => (None, None),
        };
        let total = combined_loss(mse, ce.unwrap_or(0.0), alpha).unwrap_or(f64::NAN);
        Ok((LossParts { mse, ce, total }, d_reg, d_logits))
    }

    /// Tensor names and shapes in checkpoint declaration order.
    pub fn shape_table(&self) -> Vec<(String, usize, usize)> {
        self.params()
            .iter()
            .map(|p| (p.name.clone(), p.value.rows(), p.value.cols()))
            .collect()
    }

    /// Rounds every parameter through `f32`, the checkpoint precision.
    pub fn round_to_f32(&mut self) {
        self.params_mut().into_iter().for_each(|p| p.value.round_to_f32());
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            header: CheckpointHeader {
                arch_tag: self.spec.variant.tag().into(),
                context: self.spec.context.window_frames() as u32,
                alpha: self.alpha,
                seed: self.seed,
                init: INIT_SCHEME.into(),
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
        let variant = Variant::from_tag(&ckpt.header.arch_tag)?;
        let context = ContextConfig::new(ckpt.header.context as usize)?;
        let find = |name: &str| {
            ckpt.tensors
                .iter()
                .find(|t| t.name == name)
                .map(|t| t.value.shape())
                .ok_or_else(|| AaiError::Shape(format!("checkpoint lacks tensor {name}")))
        };
        let width = find("input.weight")?.0;
        let hidden = find("lstm1.fwd.u")?.1;
        let spec = ArchSpec::new(variant, context).with_sizes(width, hidden);
        let mut model = Self::build(spec, ckpt.header.seed)?;
        model.alpha = ckpt.header.alpha;
        let values = ckpt.expect_tensors(&model.shape_table())?;
        for (p, v) in model.params_mut().into_iter().zip(values) {
            p.value = v.clone();
        }
        Ok(model)
    }
}

impl SeqModel for InversionModel {
    fn loss_and_grad(&mut self, batch: &Batch, alpha: f64) -> Result<LossParts> {
        let out = self.forward_train(&batch.features, &batch.layout)?;
        let (parts, d_reg, d_logits) = self.batch_loss(&out, batch, alpha)?;
        self.backward(&d_reg, d_logits.as_ref(), &batch.layout)?;
        Ok(parts)
    }

    fn loss(&self, batch: &Batch, alpha: f64) -> Result<LossParts> {
        let out = self.forward(&batch.features, &batch.layout)?;
        Ok(self.batch_loss(&out, batch, alpha)?.0)
    }

    fn params(&self) -> Vec<&Param> {
        let mut p = self.input.params();
        p.extend(self.lstm1.params());
        p.extend(self.lstm2.params());
        p.extend(self.dense1.params());
        p.extend(self.dense2.params());
        p.extend(self.head.params());
        if let Some(h) = &self.phoneme_head {
            p.extend(h.params());
        }
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.input.params_mut();
        p.extend(self.lstm1.params_mut());
        p.extend(self.lstm2.params_mut());
        p.extend(self.dense1.params_mut());
        p.extend(self.dense2.params_mut());
        p.extend(self.head.params_mut());
        if let Some(h) = &mut self.phoneme_head {
            p.extend(h.params_mut());
        }
        p
    }
}
