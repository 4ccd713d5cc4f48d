use crate::error::{AaiError, Result};

use super::Tensor2;

/// Time-major layout of a padded batch: row `t * batch + b` holds step `t` of
/// sequence `b`; steps at or beyond `lengths[b]` are padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchLayout {
    steps: usize,
    lengths: Vec<usize>,
}

impl BatchLayout {
    pub fn new(lengths: Vec<usize>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(AaiError::EmptyInput("batch holds no sequences".into()));
        }
        if lengths.iter().any(|&l| l == 0) {
            return Err(AaiError::EmptyInput("zero-length sequence in batch".into()));
        }
        let steps = *lengths.iter().max().unwrap();
        Ok(Self { steps, lengths })
    }

    /// Layout with extra padding steps beyond the longest sequence.
    pub fn with_steps(lengths: Vec<usize>, steps: usize) -> Result<Self> {
        let mut l = Self::new(lengths)?;
        if steps < l.steps {
            return Err(AaiError::Shape(format!(
                "{steps} steps cannot hold a sequence of length {}",
                l.steps
            )));
        }
        l.steps = steps;
        Ok(l)
    }

    /// A single unpadded sequence.
    pub fn single(len: usize) -> Result<Self> {
        Self::new(vec![len])
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn batch(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn rows(&self) -> usize {
        self.steps * self.batch()
    }

    pub fn row(&self, t: usize, b: usize) -> usize {
        t * self.batch() + b
    }

    pub fn is_valid(&self, t: usize, b: usize) -> bool {
        t < self.lengths[b]
    }

    /// 1.0 for real rows, 0.0 for padding, in row order.
    pub fn row_mask(&self) -> Vec<f64> {
        (0..self.steps)
            .flat_map(|t| (0..self.batch()).map(move |b| (t, b)))
            .map(|(t, b)| if self.is_valid(t, b) { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn valid_rows(&self) -> usize {
        self.lengths.iter().sum()
    }

    /// Packs per-sequence `len x dim` matrices into one padded tensor.
    pub fn pack(&self, seqs: &[&Tensor2]) -> Result<Tensor2> {
        if seqs.len() != self.batch() {
            return Err(AaiError::Shape("sequence count differs from layout".into()));
        }
        let dim = seqs[0].cols();
        let mut out = Tensor2::zeros(self.rows(), dim);
        for (b, s) in seqs.iter().enumerate() {
            if s.rows() != self.lengths[b] || s.cols() != dim {
                return Err(AaiError::Shape(format!(
                    "sequence {b} is {:?}, layout expects {} x {dim}",
                    s.shape(),
                    self.lengths[b]
                )));
            }
            for t in 0..s.rows() {
                out.row_mut(self.row(t, b)).copy_from_slice(s.row(t));
            }
        }
        Ok(out)
    }

    /// Extracts the real rows of sequence `b`.
    pub fn unpack(&self, x: &Tensor2, b: usize) -> Tensor2 {
        let mut out = Tensor2::zeros(self.lengths[b], x.cols());
        for t in 0..self.lengths[b] {
            out.row_mut(t).copy_from_slice(x.row(self.row(t, b)));
        }
        out
    }
}
