use rand::Rng;

use super::Tensor2;

/// A learnable tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor2,
    pub grad: Tensor2,
}

impl Param {
    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Self {
            name: name.into(),
            value: Tensor2::zeros(rows, cols),
            grad: Tensor2::zeros(rows, cols),
        }
    }

    /// Uniform in `(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn uniform<R: Rng>(name: impl Into<String>, rows: usize, cols: usize, fan_in: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let mut p = Self::zeros(name, rows, cols);
        p.value
            .data_mut()
            .iter_mut()
            .for_each(|v| *v = rng.gen_range(-bound..bound));
        p
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.data().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Global L2 norm of all gradients.
pub fn grad_norm<'a>(params: impl IntoIterator<Item = &'a Param>) -> f64 {
    params.into_iter().map(|p| p.grad.sum_sq()).sum::<f64>().sqrt()
}

/// Rescales gradients so their global norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_grad_norm(params: &mut [&mut Param], max_norm: f64) -> f64 {
    let norm = grad_norm(params.iter().map(|p| &**p));
    if norm > max_norm && norm.is_finite() {
        let scale = max_norm / norm;
        for p in params.iter_mut() {
            p.grad.map_inplace(|g| g * scale);
        }
    }
    norm
}
