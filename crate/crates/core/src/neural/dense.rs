use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{gemm, MatRef};
use super::{Param, Tensor2};
use crate::error::{AaiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Identity,
}

#[derive(Debug, Clone)]
struct DenseCache {
    input: Tensor2,
    output: Tensor2,
}

/// Fully connected layer `y = act(x W^T + b)` with `W` stored `out x in`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub weight: Param,
    pub bias: Param,
    pub activation: Activation,
    cache: Option<DenseCache>,
}

impl DenseLayer {
    pub fn new<R: Rng>(name: &str, input: usize, output: usize, activation: Activation, rng: &mut R) -> Self {
        Self {
            weight: Param::uniform(format!("{name}.weight"), output, input, input, rng),
            bias: Param::zeros(format!("{name}.bias"), 1, output),
            activation,
            cache: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.value.rows()
    }

    pub fn forward(&self, x: &Tensor2) -> Result<Tensor2> {
        if x.cols() != self.input_dim() {
            return Err(AaiError::Shape(format!(
                "{}: input has {} columns, layer expects {}",
                self.weight.name,
                x.cols(),
                self.input_dim()
            )));
        }
        let mut y = Tensor2::zeros(x.rows(), self.output_dim());
        gemm(MatRef::of(x), MatRef::of(&self.weight.value).t(), 0.0, y.data_mut());
        y.add_row_vector(self.bias.value.data());
        if self.activation == Activation::Tanh {
            y.map_inplace(f64::tanh);
        }
        Ok(y)
    }

    /// Forward pass that keeps what [`DenseLayer::backward`] needs.
    pub fn forward_train(&mut self, x: &Tensor2) -> Result<Tensor2> {
        let y = self.forward(x)?;
        self.cache = Some(DenseCache {
            input: x.clone(),
            output: y.clone(),
        });
        Ok(y)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, dy: &Tensor2) -> Result<Tensor2> {
        let cache = self.cache.take().ok_or(AaiError::MissingCache("dense layer"))?;
        if dy.shape() != cache.output.shape() {
            return Err(AaiError::Shape(format!(
                "{}: upstream gradient {:?} does not match output {:?}",
                self.weight.name,
                dy.shape(),
                cache.output.shape()
            )));
        }
        let mut dz = dy.clone();
        if self.activation == Activation::Tanh {
            dz.data_mut()
                .iter_mut()
                .zip(cache.output.data())
                .for_each(|(g, y)| *g *= 1.0 - y * y);
        }
        gemm(
            MatRef::of(&dz).t(),
            MatRef::of(&cache.input),
            1.0,
            self.weight.grad.data_mut(),
        );
        let db = self.bias.grad.data_mut();
        for r in 0..dz.rows() {
            db.iter_mut().zip(dz.row(r)).for_each(|(b, g)| *b += g);
        }
        let mut dx = Tensor2::zeros(dz.rows(), self.input_dim());
        gemm(MatRef::of(&dz), MatRef::of(&self.weight.value), 0.0, dx.data_mut());
        Ok(dx)
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn backward_without_forward_is_missing_cache() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut l = DenseLayer::new("d", 3, 2, Activation::Tanh, &mut rng);
        assert!(matches!(
            l.backward(&Tensor2::zeros(1, 2)),
            Err(AaiError::MissingCache(_))
        ));
    }

    #[test]
    fn identity_layer_is_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut l = DenseLayer::new("d", 2, 2, Activation::Identity, &mut rng);
        l.weight.value = Tensor2::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        l.bias.value = Tensor2::from_vec(1, 2, vec![0.5, -0.5]).unwrap();
        let y = l.forward(&Tensor2::from_vec(1, 2, vec![1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(y.data(), &[3.5, 6.5]);
    }

    #[test]
    fn wrong_input_width_is_shape_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = DenseLayer::new("d", 3, 2, Activation::Tanh, &mut rng);
        assert!(l.forward(&Tensor2::zeros(4, 2)).is_err());
    }
}
