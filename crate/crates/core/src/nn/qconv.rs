//! Quantum convolution: each window is encoded into `m·n` qubits, evolved by
//! the filter circuit, and read out as `⟨Z^⊗N⟩`. No activation follows.

use rand::Rng;

use crate::error::{Error, Result};
use crate::filter::{product_state, CompiledFilter, DensityAccumulator};
use crate::nn::window::{WindowPlan, WindowSpec};
use crate::pqc::{
    build_circuit, build_circuit_with, CircuitSpec, Entangler, ParamVector, ShiftRule,
};
use crate::tensor::{Shape, Tensor};

#[derive(Debug, Clone)]
pub struct QuantumConv {
    plan: WindowPlan,
    circuit: CircuitSpec,
    filters: Vec<ParamVector>,
    compiled: Vec<CompiledFilter>,
    rule: ShiftRule,
}

#[derive(Debug, Clone)]
pub struct QuantumConvCache {
    input: Tensor,
}

/// Pending parameter gradient: one weighted density operator per filter.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumConvGrad {
    density: Vec<DensityAccumulator>,
}

impl QuantumConvGrad {
    pub fn merge(&mut self, other: &QuantumConvGrad) {
        for (a, b) in self.density.iter_mut().zip(&other.density) {
            a.merge(b);
        }
    }
}

impl QuantumConv {
    /// Filters initialised with angles uniform on `[0, 2π)`.
    pub fn new<R: Rng + ?Sized>(
        input: Shape,
        window: WindowSpec,
        n_filters: usize,
        depth: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Self::new_with(input, window, n_filters, depth, Entangler::Ladder, rng)
    }

    pub fn new_with<R: Rng + ?Sized>(
        input: Shape,
        window: WindowSpec,
        n_filters: usize,
        depth: usize,
        entangler: Entangler,
        rng: &mut R,
    ) -> Result<Self> {
        let circuit = build_circuit_with(window.cells(), depth, entangler)?;
        let filters = (0..n_filters)
            .map(|_| {
                ParamVector::new(
                    (0..circuit.param_count())
                        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_circuit(input, window, circuit, filters)
    }

    pub fn with_params(
        input: Shape,
        window: WindowSpec,
        depth: usize,
        filters: Vec<ParamVector>,
    ) -> Result<Self> {
        Self::from_circuit(
            input,
            window,
            build_circuit(window.cells(), depth)?,
            filters,
        )
    }

    pub fn from_circuit(
        input: Shape,
        window: WindowSpec,
        circuit: CircuitSpec,
        filters: Vec<ParamVector>,
    ) -> Result<Self> {
        if filters.is_empty() {
            return Err(Error::shape(
                "quantum convolution needs at least one filter",
            ));
        }
        if circuit.n_qubits() != window.cells() {
            return Err(Error::shape(format!(
                "window has {} cells but circuit has {} qubits",
                window.cells(),
                circuit.n_qubits()
            )));
        }
        let plan = WindowPlan::new(input, window)?;
        let compiled = filters
            .iter()
            .map(|p| CompiledFilter::new(&circuit, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            plan,
            circuit,
            filters,
            compiled,
            rule: ShiftRule::EXACT,
        })
    }

    pub fn with_shift_rule(mut self, rule: ShiftRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn circuit(&self) -> &CircuitSpec {
        &self.circuit
    }

    pub fn filters(&self) -> &[ParamVector] {
        &self.filters
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
        self.filters.len() * self.circuit.param_count()
    }

    pub fn params_flat(&self, out: &mut Vec<f64>) {
        for f in &self.filters {
            out.extend_from_slice(f.as_slice());
        }
    }

    /// Reads `param_count()` values from the front of `params` and recompiles.
    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<usize> {
        let per = self.circuit.param_count();
        for (i, f) in self.filters.iter_mut().enumerate() {
            *f = ParamVector::new(params[i * per..(i + 1) * per].to_vec())?;
        }
        self.compiled = self
            .filters
            .iter()
            .map(|p| CompiledFilter::new(&self.circuit, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.param_count())
    }

    pub fn new_grad(&self) -> QuantumConvGrad {
        QuantumConvGrad {
            density: vec![DensityAccumulator::new(self.circuit.n_qubits()); self.filters.len()],
        }
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        if input.shape() != self.plan.input {
            return Err(Error::shape(format!(
                "quantum conv expects {}, got {}",
                self.plan.input,
                input.shape()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, QuantumConvCache)> {
        self.check_input(input)?;
        let out_shape = self.output_shape();
        let k = self.filters.len();
        let mut out = Tensor::zeros(out_shape);
        let mut window = Vec::with_capacity(self.plan.cells());
        let mut psi = Vec::new();
        for pos in 0..self.plan.positions() {
            for ch in 0..self.plan.input.channels {
                self.plan.gather(input.data(), pos, ch, &mut window);
                product_state(&window, &mut psi);
                for (f, filter) in self.compiled.iter().enumerate() {
                    out.data_mut()[pos * out_shape.channels + ch * k + f] =
                        filter.expectation(&psi);
                }
            }
        }
        Ok((
            out,
            QuantumConvCache {
                input: input.clone(),
            },
        ))
    }

    /// Folds `upstream` into `grad` and, when `want_input`, returns the
    /// gradient with respect to the layer input (summed over overlaps).
    pub fn accumulate_backward(
        &self,
        cache: &QuantumConvCache,
        upstream: &Tensor,
        grad: &mut QuantumConvGrad,
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
        let out_channels = d * k;
        let mut input_grad = want_input.then(|| Tensor::zeros(self.plan.input));
        let mut window = Vec::with_capacity(self.plan.cells());
        let mut psi = Vec::new();
        let mut scratch = Vec::new();
        for pos in 0..self.plan.positions() {
            for ch in 0..d {
                self.plan.gather(cache.input.data(), pos, ch, &mut window);
                product_state(&window, &mut psi);
                for f in 0..k {
                    let u = upstream.data()[pos * out_channels + ch * k + f];
                    if u == 0.0 {
                        continue;
                    }
                    grad.density[f].add(u, &psi);
                    if let Some(ig) = input_grad.as_mut() {
                        let local = self.compiled[f].input_grad(&window, self.rule, &mut scratch);
                        for (src, g) in self.plan.sources(pos).iter().zip(local) {
                            if let Some(px) = src {
                                ig.data_mut()[px * d + ch] += u * g;
                            }
                        }
                    }
                }
            }
        }
        Ok(input_grad)
    }

    /// Resolves pending density operators into per-filter parameter gradients.
    pub fn param_grads(&self, grad: &QuantumConvGrad) -> Result<Vec<Vec<f64>>> {
        grad.density
            .iter()
            .zip(&self.filters)
            .map(|(rho, params)| rho.param_shift_grad(&self.circuit, params, self.rule))
            .collect()
    }

    /// Single-sample backward pass: `(per-filter parameter grads, input grad)`.
    pub fn backward(
        &self,
        cache: &QuantumConvCache,
        upstream: &Tensor,
    ) -> Result<(Vec<Vec<f64>>, Tensor)> {
        let mut grad = self.new_grad();
        let input_grad = self
            .accumulate_backward(cache, upstream, &mut grad, true)?
            .expect("input gradient requested");
        Ok((self.param_grads(&grad)?, input_grad))
    }
}
