//! Layer stacks: declarative specs, forward/backward composition, and a stable
//! flat parameter ordering (layers in order; within a layer, filter by filter,
//! dense weights row-major then bias).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::conv::{ClassicalConv, ClassicalConvCache};
use crate::nn::dense::{Dense, DenseCache, DenseGrad};
use crate::nn::pool::{MaxPool, MaxPoolCache, PoolMode};
use crate::nn::qconv::{QuantumConv, QuantumConvCache, QuantumConvGrad};
use crate::nn::window::WindowSpec;
use crate::pqc::Entangler;
use crate::tensor::{Shape, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    QuantumConv {
        window: WindowSpec,
        filters: usize,
        depth: usize,
        #[serde(default)]
        entangler: Entangler,
    },
    ClassicalConv {
        window: WindowSpec,
        filters: usize,
        relu: bool,
    },
    MaxPool {
        window: WindowSpec,
        #[serde(default)]
        mode: PoolMode,
    },
    /// Flattens its input.
    Dense { out_dim: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input: Shape,
    pub layers: Vec<LayerSpec>,
    pub n_classes: usize,
}

impl NetworkSpec {
    /// Input shape followed by every layer's output shape. Dense outputs are
    /// reported as `1×1×out_dim`.
    pub fn layer_shapes(&self) -> Result<Vec<Shape>> {
        let mut shapes = vec![self.input];
        let mut flattened = false;
        for (i, layer) in self.layers.iter().enumerate() {
            let cur = *shapes.last().unwrap();
            let next = match layer {
                LayerSpec::QuantumConv {
                    window, filters, ..
                }
                | LayerSpec::ClassicalConv {
                    window, filters, ..
                } => {
                    if flattened {
                        return Err(Error::shape(format!("layer {i}: convolution after dense")));
                    }
                    if *filters == 0 {
                        return Err(Error::shape(format!("layer {i}: zero filters")));
                    }
                    crate::nn::window::output_shape(
                        (cur.height, cur.width),
                        window,
                        *filters,
                        cur.channels,
                    )?
                }
                LayerSpec::MaxPool { window, .. } => {
                    if flattened {
                        return Err(Error::shape(format!("layer {i}: pooling after dense")));
                    }
                    crate::nn::window::output_shape(
                        (cur.height, cur.width),
                        window,
                        1,
                        cur.channels,
                    )?
                }
                LayerSpec::Dense { out_dim } => {
                    if *out_dim == 0 {
                        return Err(Error::shape(format!("layer {i}: dense output is empty")));
                    }
                    flattened = true;
                    Shape::new(1, 1, *out_dim)
                }
            };
            shapes.push(next);
        }
        match self.layers.last() {
            Some(LayerSpec::Dense { out_dim }) if *out_dim == self.n_classes => Ok(shapes),
            _ => Err(Error::shape(format!(
                "network must end in a dense layer with {} outputs",
                self.n_classes
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Layer {
    Quantum(QuantumConv),
    Classical(ClassicalConv),
    Pool(MaxPool),
    Dense(Dense),
}

impl Layer {
    pub fn param_count(&self) -> usize {
        match self {
            Layer::Quantum(l) => l.param_count(),
            Layer::Classical(l) => l.param_count(),
            Layer::Pool(_) => 0,
            Layer::Dense(l) => l.param_count(),
        }
    }
}

#[derive(Debug, Clone)]
enum LayerCache {
    Quantum(QuantumConvCache),
    Classical(ClassicalConvCache),
    Pool(MaxPoolCache),
    Dense(DenseCache, Shape),
}

/// Forward activations of one sample, consumed by `Network::backward`.
#[derive(Debug, Clone)]
pub struct Trace {
    caches: Vec<LayerCache>,
}

#[derive(Debug, Clone, PartialEq)]
enum LayerGrad {
    Quantum(QuantumConvGrad),
    Classical(Vec<Vec<f64>>),
    Pool,
    Dense(DenseGrad),
}

/// Gradient accumulator for every trainable parameter of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn merge(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            match (a, b) {
                (LayerGrad::Quantum(a), LayerGrad::Quantum(b)) => a.merge(b),
                (LayerGrad::Classical(a), LayerGrad::Classical(b)) => {
                    for (x, y) in a.iter_mut().flatten().zip(b.iter().flatten()) {
                        *x += y;
                    }
                }
                (LayerGrad::Dense(a), LayerGrad::Dense(b)) => {
                    for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                        *x += y;
                    }
                    for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                        *x += y;
                    }
                }
                _ => {}
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    layers: Vec<Layer>,
}

impl Network {
    pub fn new<R: Rng + ?Sized>(spec: NetworkSpec, rng: &mut R) -> Result<Self> {
        let shapes = spec.layer_shapes()?;
        let layers = spec
            .layers
            .iter()
            .zip(&shapes)
            .map(|(layer, &input)| {
                Ok(match *layer {
                    LayerSpec::QuantumConv {
                        window,
                        filters,
                        depth,
                        entangler,
                    } => Layer::Quantum(QuantumConv::new_with(
                        input, window, filters, depth, entangler, rng,
                    )?),
                    LayerSpec::ClassicalConv {
                        window,
                        filters,
                        relu,
                    } => Layer::Classical(ClassicalConv::new(input, window, filters, relu, rng)?),
                    LayerSpec::MaxPool { window, mode } => {
                        Layer::Pool(MaxPool::with_mode(input, window, mode)?)
                    }
                    LayerSpec::Dense { out_dim } => {
                        Layer::Dense(Dense::new(input.len(), out_dim, rng)?)
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn n_classes(&self) -> usize {
        self.spec.n_classes
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            match layer {
                Layer::Quantum(l) => l.params_flat(&mut out),
                Layer::Classical(l) => l.params_flat(&mut out),
                Layer::Pool(_) => {}
                Layer::Dense(l) => l.params_flat(&mut out),
            }
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::shape(format!(
                "network has {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            let rest = &params[offset..];
            offset += match layer {
                Layer::Quantum(l) => l.set_params_flat(rest)?,
                Layer::Classical(l) => l.set_params_flat(rest)?,
                Layer::Pool(_) => 0,
                Layer::Dense(l) => l.set_params_flat(rest)?,
            };
        }
        Ok(())
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Vec<f64>, Trace)> {
        let mut current = input.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (next, cache) = match layer {
                Layer::Quantum(l) => {
                    let (t, c) = l.forward(&current)?;
                    (t, LayerCache::Quantum(c))
                }
                Layer::Classical(l) => {
                    let (t, c) = l.forward(&current)?;
                    (t, LayerCache::Classical(c))
                }
                Layer::Pool(l) => {
                    let (t, c) = l.forward(&current)?;
                    (t, LayerCache::Pool(c))
                }
                Layer::Dense(l) => {
                    let (y, c) = l.forward(current.data())?;
                    let out = Tensor::new(Shape::new(1, 1, y.len()), y)?;
                    (out, LayerCache::Dense(c, current.shape()))
                }
            };
            caches.push(cache);
            current = next;
        }
        Ok((current.into_data(), Trace { caches }))
    }

    /// Output of every layer for one input, in order.
    pub fn activations(&self, input: &Tensor) -> Result<Vec<Tensor>> {
        let mut outs: Vec<Tensor> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let current = outs.last().unwrap_or(input);
            let next = match layer {
                Layer::Quantum(l) => l.forward(current)?.0,
                Layer::Classical(l) => l.forward(current)?.0,
                Layer::Pool(l) => l.forward(current)?.0,
                Layer::Dense(l) => {
                    let y = l.forward(current.data())?.0;
                    Tensor::new(Shape::new(1, 1, y.len()), y)?
                }
            };
            outs.push(next);
        }
        Ok(outs)
    }

    pub fn predict(&self, input: &Tensor) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.0)
    }

    pub fn new_gradients(&self) -> Gradients {
        Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| match l {
                    Layer::Quantum(l) => LayerGrad::Quantum(l.new_grad()),
                    Layer::Classical(l) => LayerGrad::Classical(l.new_grad()),
                    Layer::Pool(_) => LayerGrad::Pool,
                    Layer::Dense(l) => LayerGrad::Dense(l.new_grad()),
                })
                .collect(),
        }
    }

    /// Backpropagates `loss_grad` through the trace of one sample and adds the
    /// result to `grads`.
    pub fn backward(&self, trace: &Trace, loss_grad: &[f64], grads: &mut Gradients) -> Result<()> {
        if trace.caches.len() != self.layers.len() || grads.layers.len() != self.layers.len() {
            return Err(Error::State("trace does not belong to this network".into()));
        }
        let first_trainable = self.layers.iter().position(|l| l.param_count() > 0);
        let mut upstream = Tensor::new(Shape::new(1, 1, loss_grad.len()), loss_grad.to_vec())?;
        for (i, ((layer, cache), grad)) in self
            .layers
            .iter()
            .zip(&trace.caches)
            .zip(grads.layers.iter_mut())
            .enumerate()
            .rev()
        {
            let want_input = first_trainable.is_some_and(|f| i > f);
            let next = match (layer, cache, grad) {
                (Layer::Quantum(l), LayerCache::Quantum(c), LayerGrad::Quantum(g)) => {
                    l.accumulate_backward(c, &upstream, g, want_input)?
                }
                (Layer::Classical(l), LayerCache::Classical(c), LayerGrad::Classical(g)) => {
                    l.accumulate_backward(c, &upstream, g, want_input)?
                }
                (Layer::Pool(l), LayerCache::Pool(c), LayerGrad::Pool) => {
                    want_input.then(|| l.backward(c, &upstream)).transpose()?
                }
                (Layer::Dense(l), LayerCache::Dense(c, in_shape), LayerGrad::Dense(g)) => {
                    let ig = l.accumulate_backward(c, upstream.data(), g)?;
                    Some(Tensor::new(*in_shape, ig)?)
                }
                _ => return Err(Error::State(format!("layer {i}: cache kind mismatch"))),
            };
            match next {
                Some(t) => upstream = t,
                None => break,
            }
        }
        Ok(())
    }

    /// Resolves accumulated gradients into the flat parameter order.
    pub fn gradients_flat(&self, grads: &Gradients) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.param_count());
        for (layer, grad) in self.layers.iter().zip(&grads.layers) {
            match (layer, grad) {
                (Layer::Quantum(l), LayerGrad::Quantum(g)) => {
                    for filter in l.param_grads(g)? {
                        out.extend(filter);
                    }
                }
                (Layer::Classical(_), LayerGrad::Classical(g)) => {
                    out.extend(g.iter().flatten());
                }
                (Layer::Pool(_), LayerGrad::Pool) => {}
                (Layer::Dense(_), LayerGrad::Dense(g)) => {
                    out.extend(&g.weights);
                    out.extend(&g.bias);
                }
                _ => return Err(Error::State("gradient kind mismatch".into())),
            }
        }
        Ok(out)
    }
}
