use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopDecision {
    Improved,
    Wait,
    Stop,
}

/// Stops once `patience` consecutive evaluations fail to beat the best loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopper {
    pub patience: usize,
    best: Option<f64>,
    since_improvement: usize,
    evaluations: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            since_improvement: 0,
            evaluations: 0,
        }
    }

    pub fn observe(&mut self, val_loss: f64) -> StopDecision {
        self.evaluations += 1;
        match self.best {
            Some(b) if !(val_loss < b) => {
                self.since_improvement += 1;
                if self.since_improvement >= self.patience {
                    StopDecision::Stop
                } else {
                    StopDecision::Wait
                }
            }
            _ => {
                self.best = Some(val_loss);
                self.since_improvement = 0;
                StopDecision::Improved
            }
        }
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn since_improvement(&self) -> usize {
        self.since_improvement
    }
}
