use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AaiError, Result};

pub const MIN_SPLIT_ACQUISITIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl SplitName {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "validation" | "val" => Ok(Self::Validation),
            "test" => Ok(Self::Test),
            _ => Err(AaiError::Config(format!("unknown split {s:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Validation => "validation",
            Self::Test => "test",
        }
    }
}

/// Acquisition-level 80/10/10 partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl SplitManifest {
    pub fn ids(&self, split: SplitName) -> &[String] {
        match split {
            SplitName::Train => &self.train,
            SplitName::Validation => &self.validation,
            SplitName::Test => &self.test,
        }
    }

    pub fn split_of(&self, id: &str) -> Option<SplitName> {
        [SplitName::Train, SplitName::Validation, SplitName::Test]
            .into_iter()
            .find(|&s| self.ids(s).iter().any(|x| x == id))
    }
}

/// Shuffles the sorted ids under `seed`; validation and test each take
/// round(n/10) acquisitions and training keeps the rest.
pub fn make_split(ids: &[String], seed: u64) -> Result<SplitManifest> {
    let mut sorted = ids.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != ids.len() {
        return Err(AaiError::InvalidValue("duplicate acquisition ids".into()));
    }
    let n = sorted.len();
    if n < MIN_SPLIT_ACQUISITIONS {
        return Err(AaiError::TooSmall(format!(
            "split needs at least {MIN_SPLIT_ACQUISITIONS} acquisitions, got {n}"
        )));
    }
    sorted.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = (n as f64 / 10.0).round() as usize;
    let mut validation = sorted[..k].to_vec();
    let mut test = sorted[k..2 * k].to_vec();
    let mut train = sorted[2 * k..].to_vec();
    validation.sort();
    test.sort();
    train.sort();
    Ok(SplitManifest {
        seed,
        train,
        validation,
        test,
    })
}
