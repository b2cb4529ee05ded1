use rand::Rng;

use crate::error::{Error, Result};

/// Fully connected layer `y = W x + b` with linear output.
#[derive(Debug, Clone)]
pub struct Dense {
    in_dim: usize,
    out_dim: usize,
    /// Row-major `out_dim × in_dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Result<Self> {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        Self::with_weights(in_dim, out_dim, weights, vec![0.0; out_dim])
    }

    pub fn with_weights(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::shape("dense layer dimensions must be positive"));
        }
        if weights.len() != in_dim * out_dim || bias.len() != out_dim {
            return Err(Error::shape(format!(
                "dense {in_dim}->{out_dim} needs {} weights and {out_dim} biases",
                in_dim * out_dim
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            bias,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn params_flat(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.weights);
        out.extend_from_slice(&self.bias);
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<usize> {
        let nw = self.weights.len();
        self.weights.copy_from_slice(&params[..nw]);
        self.bias.copy_from_slice(&params[nw..nw + self.out_dim]);
        Ok(self.param_count())
    }

    pub fn new_grad(&self) -> DenseGrad {
        DenseGrad {
            weights: vec![0.0; self.weights.len()],
            bias: vec![0.0; self.out_dim],
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, DenseCache)> {
        if input.len() != self.in_dim {
            return Err(Error::shape(format!(
                "dense layer expects {} inputs, got {}",
                self.in_dim,
                input.len()
            )));
        }
        let out = self
            .weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect();
        Ok((
            out,
            DenseCache {
                input: input.to_vec(),
            },
        ))
    }

    /// Accumulates parameter gradients into `grad` and returns `Wᵀ g`.
    pub fn accumulate_backward(
        &self,
        cache: &DenseCache,
        upstream: &[f64],
        grad: &mut DenseGrad,
    ) -> Result<Vec<f64>> {
        if upstream.len() != self.out_dim || cache.input.len() != self.in_dim {
            return Err(Error::shape("dense backward received mismatched shapes"));
        }
        let mut input_grad = vec![0.0; self.in_dim];
        for (o, &g) in upstream.iter().enumerate() {
            grad.bias[o] += g;
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let grow = &mut grad.weights[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] += g * cache.input[i];
                input_grad[i] += g * row[i];
            }
        }
        Ok(input_grad)
    }
}
