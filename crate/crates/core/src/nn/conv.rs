//! Classical convolution baseline: each cell is `Σ A_ij P_ij` over its window,
//! with no bias, optionally followed by ReLU.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::window::{WindowPlan, WindowSpec};
use crate::tensor::{Shape, Tensor};

#[derive(Debug, Clone)]
pub struct ClassicalConv {
    plan: WindowPlan,
    /// `filters[f]` holds the `m·n` weights of filter `f`, row-major.
    filters: Vec<Vec<f64>>,
    relu: bool,
}

#[derive(Debug, Clone)]
pub struct ClassicalConvCache {
    input: Tensor,
    pre_activation: Tensor,
}

impl ClassicalConv {
    /// Glorot-uniform weights with `fan_in = m·n`, `fan_out = k·m·n`.
    pub fn new<R: Rng + ?Sized>(
        input: Shape,
        window: WindowSpec,
        n_filters: usize,
        relu: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let cells = window.cells();
        let limit = (6.0 / (cells + n_filters * cells) as f64).sqrt();
        let filters = (0..n_filters)
            .map(|_| (0..cells).map(|_| rng.gen_range(-limit..limit)).collect())
            .collect();
        Self::with_weights(input, window, filters, relu)
    }

    pub fn with_weights(
        input: Shape,
        window: WindowSpec,
        filters: Vec<Vec<f64>>,
        relu: bool,
    ) -> Result<Self> {
        if filters.is_empty() {
            return Err(Error::shape("convolution needs at least one filter"));
        }
        if let Some(f) = filters.iter().find(|f| f.len() != window.cells()) {
            return Err(Error::shape(format!(
                "filter has {} weights, window has {} cells",
                f.len(),
                window.cells()
            )));
        }
        Ok(Self {
            plan: WindowPlan::new(input, window)?,
            filters,
            relu,
        })
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    pub fn relu(&self) -> bool {
        self.relu
    }

    pub fn input_shape(&self) -> Shape {
        self.plan.input
    }

    pub fn output_shape(&self) -> Shape {
        Shape::new(
            self.plan.out_h,
            self.plan.out_w,
            self.plan.input.channels * self.filters.len(),
        )
    }

    pub fn param_count(&self) -> usize {
        self.filters.len() * self.plan.cells()
    }

    pub fn params_flat(&self, out: &mut Vec<f64>) {
        for f in &self.filters {
            out.extend_from_slice(f);
        }
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<usize> {
        let cells = self.plan.cells();
        for (i, f) in self.filters.iter_mut().enumerate() {
            f.copy_from_slice(&params[i * cells..(i + 1) * cells]);
        }
        Ok(self.param_count())
    }

    pub fn new_grad(&self) -> Vec<Vec<f64>> {
        vec![vec![0.0; self.plan.cells()]; self.filters.len()]
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, ClassicalConvCache)> {
        if input.shape() != self.plan.input {
            return Err(Error::shape(format!(
                "convolution expects {}, got {}",
                self.plan.input,
                input.shape()
            )));
        }
        let out_shape = self.output_shape();
        let k = self.filters.len();
        let mut pre = Tensor::zeros(out_shape);
        let mut window = Vec::with_capacity(self.plan.cells());
        for pos in 0..self.plan.positions() {
            for ch in 0..self.plan.input.channels {
                self.plan.gather(input.data(), pos, ch, &mut window);
                for (f, weights) in self.filters.iter().enumerate() {
                    let v: f64 = window.iter().zip(weights).map(|(a, p)| a * p).sum();
                    pre.data_mut()[pos * out_shape.channels + ch * k + f] = v;
                }
            }
        }
        let mut out = pre.clone();
        if self.relu {
            out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
        }
        Ok((
            out,
            ClassicalConvCache {
                input: input.clone(),
                pre_activation: pre,
            },
        ))
    }

    pub fn accumulate_backward(
        &self,
        cache: &ClassicalConvCache,
        upstream: &Tensor,
        grad: &mut [Vec<f64>],
        want_input: bool,
    ) -> Result<Option<Tensor>> {
        if cache.input.shape() != self.plan.input {
            return Err(Error::State(
                "forward cache does not belong to this layer".into(),
            ));
        }
        if upstream.shape() != self.output_shape() {
            return Err(Error::shape(format!(
                "upstream gradient {} does not match output {}",
                upstream.shape(),
                self.output_shape()
            )));
        }
        let k = self.filters.len();
        let d = self.plan.input.channels;
        let mut input_grad = want_input.then(|| Tensor::zeros(self.plan.input));
        let mut window = Vec::with_capacity(self.plan.cells());
        for pos in 0..self.plan.positions() {
            for ch in 0..d {
                self.plan.gather(cache.input.data(), pos, ch, &mut window);
                for f in 0..k {
                    let idx = pos * d * k + ch * k + f;
                    let mut g = upstream.data()[idx];
                    // ReLU subgradient is 0 at 0.
                    if self.relu && cache.pre_activation.data()[idx] <= 0.0 {
                        g = 0.0;
                    }
                    if g == 0.0 {
                        continue;
                    }
                    for (acc, a) in grad[f].iter_mut().zip(&window) {
                        *acc += g * a;
                    }
                    if let Some(ig) = input_grad.as_mut() {
                        for (src, p) in self.plan.sources(pos).iter().zip(&self.filters[f]) {
                            if let Some(px) = src {
                                ig.data_mut()[px * d + ch] += g * p;
                            }
                        }
                    }
                }
            }
        }
        Ok(input_grad)
    }

    pub fn backward(
        &self,
        cache: &ClassicalConvCache,
        upstream: &Tensor,
    ) -> Result<(Vec<Vec<f64>>, Tensor)> {
        let mut grad = self.new_grad();
        let ig = self
            .accumulate_backward(cache, upstream, &mut grad, true)?
            .expect("input gradient requested");
        Ok((grad, ig))
    }
}
