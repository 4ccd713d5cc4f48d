//! The four inversion architectures and the contour autoencoder.

mod autoencoder;
mod inversion;
mod invert;

pub use autoencoder::{train_autoencoder, ContourAutoencoder, AE_ARCH_TAG, AE_HIDDEN};
pub use inversion::{InversionModel, ModelOutput};
pub use invert::{invert, predict_normalized, ContourDecoder, Inversion};

use serde::{Deserialize, Serialize};

use crate::contour::{CONTOUR_DIM, N_PHONEMES};
use crate::dsp::ContextConfig;
use crate::error::{AaiError, Result};

pub const LATENT_DIM: usize = 16;
pub const DEFAULT_WIDTH: usize = 300;
pub const DEFAULT_HIDDEN: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Contour regression only.
    St,
    /// Contour regression plus phoneme classification.
    Mt,
    /// Latent regression decoded by the autoencoder.
    StAe,
    /// Latent regression plus phoneme classification.
    MtAe,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::St, Variant::Mt, Variant::StAe, Variant::MtAe];

    pub fn tag(self) -> &'static str {
        match self {
            Variant::St => "ST",
            Variant::Mt => "MT",
            Variant::StAe => "ST_AE",
            Variant::MtAe => "MT_AE",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.tag() == tag)
            .ok_or_else(|| AaiError::Config(format!("unknown architecture variant {tag:?}")))
    }

    /// Accepts the command-line spellings `st`, `mt`, `st-ae`, `mt-ae`.
    pub fn from_cli(name: &str) -> Result<Self> {
        Self::from_tag(&name.to_ascii_uppercase().replace('-', "_"))
    }

    pub fn has_phoneme_head(self) -> bool {
        matches!(self, Variant::Mt | Variant::MtAe)
    }

    pub fn uses_autoencoder(self) -> bool {
        matches!(self, Variant::StAe | Variant::MtAe)
    }

    /// Width of the regression head.
    pub fn regression_dim(self) -> usize {
        if self.uses_autoencoder() {
            LATENT_DIM
        } else {
            CONTOUR_DIM
        }
    }
}

/// Dense(width) → BiLSTM(hidden) → BiLSTM(hidden) → Dense(width) → Dense(width)
/// → heads, all tanh except the linear heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub variant: Variant,
    pub context: ContextConfig,
    pub width: usize,
    /// LSTM units per direction.
    pub hidden: usize,
}

impl ArchSpec {
    pub fn new(variant: Variant, context: ContextConfig) -> Self {
        Self {
            variant,
            context,
            width: DEFAULT_WIDTH,
            hidden: DEFAULT_HIDDEN,
        }
    }

    pub fn with_sizes(mut self, width: usize, hidden: usize) -> Self {
        self.width = width;
        self.hidden = hidden;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.context.stacked_dim()
    }

    pub fn phoneme_dim(&self) -> Option<usize> {
        self.variant.has_phoneme_head().then_some(N_PHONEMES)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.hidden == 0 {
            return Err(AaiError::Config("layer sizes must be positive".into()));
        }
        Ok(())
    }
}
