//! Per-channel pooling. Padding cells read as zero and take part in the
//! reduction. Max pooling breaks ties toward the first cell in row-major
//! order; average pooling always divides by the full window size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::window::{WindowPlan, WindowSpec};
use crate::tensor::{Shape, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolMode {
    #[default]
    Max,
    Average,
}

#[derive(Debug, Clone)]
pub struct MaxPool {
    plan: WindowPlan,
    mode: PoolMode,
}

#[derive(Debug, Clone)]
pub struct MaxPoolCache {
    /// Winning input index per output cell; `None` when padding won.
    /// Empty for average pooling.
    argmax: Vec<Option<usize>>,
}

impl MaxPool {
    pub fn new(input: Shape, window: WindowSpec) -> Result<Self> {
        Self::with_mode(input, window, PoolMode::Max)
    }

    pub fn with_mode(input: Shape, window: WindowSpec, mode: PoolMode) -> Result<Self> {
        Ok(Self {
            plan: WindowPlan::new(input, window)?,
            mode,
        })
    }

    pub fn mode(&self) -> PoolMode {
        self.mode
    }

    pub fn input_shape(&self) -> Shape {
        self.plan.input
    }

    pub fn output_shape(&self) -> Shape {
        Shape::new(self.plan.out_h, self.plan.out_w, self.plan.input.channels)
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, MaxPoolCache)> {
        if input.shape() != self.plan.input {
            return Err(Error::shape(format!(
                "pooling expects {}, got {}",
                self.plan.input,
                input.shape()
            )));
        }
        let d = self.plan.input.channels;
        let mut out = Tensor::zeros(self.output_shape());
        if self.mode == PoolMode::Average {
            let cells = self.plan.cells() as f64;
            for pos in 0..self.plan.positions() {
                for ch in 0..d {
                    let sum: f64 = self
                        .plan
                        .sources(pos)
                        .iter()
                        .flatten()
                        .map(|px| input.data()[px * d + ch])
                        .sum();
                    out.data_mut()[pos * d + ch] = sum / cells;
                }
            }
            return Ok((out, MaxPoolCache { argmax: Vec::new() }));
        }
        let mut argmax = Vec::with_capacity(out.shape().len());
        for pos in 0..self.plan.positions() {
            for ch in 0..d {
                let mut best: Option<(f64, Option<usize>)> = None;
                for src in self.plan.sources(pos) {
                    let idx = src.map(|px| px * d + ch);
                    let v = idx.map_or(0.0, |i| input.data()[i]);
                    if best.is_none_or(|(b, _)| v > b) {
                        best = Some((v, idx));
                    }
                }
                let (v, idx) = best.expect("window has at least one cell");
                out.data_mut()[pos * d + ch] = v;
                argmax.push(idx);
            }
        }
        Ok((out, MaxPoolCache { argmax }))
    }

    pub fn backward(&self, cache: &MaxPoolCache, upstream: &Tensor) -> Result<Tensor> {
        if upstream.shape() != self.output_shape() {
            return Err(Error::shape(format!(
                "upstream gradient {} does not match output {}",
                upstream.shape(),
                self.output_shape()
            )));
        }
        let mut grad = Tensor::zeros(self.plan.input);
        let d = self.plan.input.channels;
        if self.mode == PoolMode::Average {
            let cells = self.plan.cells() as f64;
            for pos in 0..self.plan.positions() {
                for ch in 0..d {
                    let g = upstream.data()[pos * d + ch] / cells;
                    for px in self.plan.sources(pos).iter().flatten() {
                        grad.data_mut()[px * d + ch] += g;
                    }
                }
            }
            return Ok(grad);
        }
        if cache.argmax.len() != upstream.data().len() {
            return Err(Error::State(
                "pooling cache does not match upstream gradient".into(),
            ));
        }
        for (src, &g) in cache.argmax.iter().zip(upstream.data()) {
            if let Some(i) = src {
                grad.data_mut()[*i] += g;
            }
        }
        Ok(grad)
    }
}
