//! Real-arithmetic fast path for quantum filters.
//!
//! Every gate in the filter circuit (`Ry` and CNOT) and the qubit encoding
//! are real, so the whole computation stays in `f64`. A filter is compiled
//! once per parameter update into its Heisenberg-picture observable
//! `O = Uᵀ Z^⊗N U`; a window's feature is then `ψᵀ O ψ` for the encoded
//! product state `ψ`.
//!
//! Parameter gradients for a batch are linear in the upstream weights, so
//! the weighted encoded states are summed into one operator
//! `ρ = Σ_w u_w ψ_w ψ_wᵀ` and the shift rule is applied once to `Tr(ρ O(θ))`.
//! Each shifted term is still an exact evaluation of the shifted circuit.

use crate::error::{Error, Result};
use crate::pqc::{CircuitSpec, Gate, ParamVector, ShiftRule};
use crate::statevector::{parity_sign, qubit_mask};

/// Writes the encoded product state `⊗_q (cos v_q, sin v_q)` into `out`.
pub fn product_state(values: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    for &v in values {
        let (s, c) = v.sin_cos();
        let len = out.len();
        out.resize(2 * len, 0.0);
        for i in (0..len).rev() {
            let a = out[i];
            out[2 * i] = a * c;
            out[2 * i + 1] = a * s;
        }
    }
}

#[derive(Clone, Copy)]
enum RealGate {
    Ry { mask: usize, cos: f64, sin: f64 },
    Cnot { cmask: usize, tmask: usize },
}

impl RealGate {
    fn from_gate(gate: &Gate, n_qubits: usize, params: &[f64]) -> Self {
        match *gate {
            Gate::Ry { qubit, param } => Self::ry(n_qubits, qubit, params[param]),
            Gate::Cnot { control, target } => RealGate::Cnot {
                cmask: qubit_mask(n_qubits, control),
                tmask: qubit_mask(n_qubits, target),
            },
        }
    }

    fn ry(n_qubits: usize, qubit: usize, angle: f64) -> Self {
        let (sin, cos) = angle.sin_cos();
        RealGate::Ry {
            mask: qubit_mask(n_qubits, qubit),
            cos,
            sin,
        }
    }

    fn transpose(self) -> Self {
        match self {
            RealGate::Ry { mask, cos, sin } => RealGate::Ry {
                mask,
                cos,
                sin: -sin,
            },
            cnot => cnot,
        }
    }

    /// `v ← G v` on a strided vector of `dim` entries.
    #[inline]
    fn apply_strided(self, data: &mut [f64], dim: usize, offset: usize, stride: usize) {
        match self {
            RealGate::Ry { mask, cos, sin } => {
                for i in (0..dim).filter(|i| i & mask == 0) {
                    let (a, b) = (offset + i * stride, offset + (i | mask) * stride);
                    let (x, y) = (data[a], data[b]);
                    data[a] = cos * x - sin * y;
                    data[b] = sin * x + cos * y;
                }
            }
            RealGate::Cnot { cmask, tmask } => {
                for i in (0..dim).filter(|i| i & cmask != 0 && i & tmask == 0) {
                    data.swap(offset + i * stride, offset + (i | tmask) * stride);
                }
            }
        }
    }

    fn apply(self, state: &mut [f64]) {
        let dim = state.len();
        self.apply_strided(state, dim, 0, 1);
    }

    /// `M ← G M Gᵀ` for a row-major `dim × dim` matrix.
    fn conjugate(self, m: &mut [f64], dim: usize) {
        for col in 0..dim {
            self.apply_strided(m, dim, col, dim);
        }
        for row in 0..dim {
            self.apply_strided(m, dim, row * dim, 1);
        }
    }
}

/// Real gates paired with `(param, qubit)` for the rotations.
fn compile_gates(spec: &CircuitSpec, params: &[f64]) -> Vec<(RealGate, Option<(usize, usize)>)> {
    spec.gates()
        .map(|g| {
            let param = match g {
                Gate::Ry { param, qubit } => Some((*param, *qubit)),
                Gate::Cnot { .. } => None,
            };
            (RealGate::from_gate(g, spec.n_qubits(), params), param)
        })
        .collect()
}

fn frobenius(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn parity_diagonal(dim: usize) -> Vec<f64> {
    let mut z = vec![0.0; dim * dim];
    for b in 0..dim {
        z[b * dim + b] = parity_sign(b);
    }
    z
}

/// A quantum filter compiled to its effective observable.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledFilter {
    n_qubits: usize,
    dim: usize,
    observable: Vec<f64>,
}

impl CompiledFilter {
    pub fn new(spec: &CircuitSpec, params: &ParamVector) -> Result<Self> {
        if params.len() != spec.param_count() {
            return Err(Error::shape(format!(
                "circuit expects {} parameters, got {}",
                spec.param_count(),
                params.len()
            )));
        }
        let n = spec.n_qubits();
        let dim = 1usize << n;
        let gates = compile_gates(spec, params.as_slice());
        // Column k of U is the circuit applied to basis state k; stored transposed.
        let mut ut = vec![0.0; dim * dim];
        for k in 0..dim {
            let col = &mut ut[k * dim..(k + 1) * dim];
            col[k] = 1.0;
            for (g, _) in &gates {
                g.apply(col);
            }
        }
        let mut observable = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let (ui, uj) = (&ut[i * dim..(i + 1) * dim], &ut[j * dim..(j + 1) * dim]);
                let v: f64 = (0..dim).map(|b| parity_sign(b) * ui[b] * uj[b]).sum();
                observable[i * dim + j] = v;
                observable[j * dim + i] = v;
            }
        }
        Ok(Self {
            n_qubits: n,
            dim,
            observable,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn observable(&self) -> &[f64] {
        &self.observable
    }

    /// `ψᵀ O ψ`.
    pub fn expectation(&self, psi: &[f64]) -> f64 {
        debug_assert_eq!(psi.len(), self.dim);
        let mut acc = 0.0;
        for (i, &pi) in psi.iter().enumerate() {
            let row = &self.observable[i * self.dim..(i + 1) * self.dim];
            acc += pi * frobenius(row, psi);
        }
        acc
    }

    pub fn feature(&self, values: &[f64], scratch: &mut Vec<f64>) -> f64 {
        debug_assert_eq!(values.len(), self.n_qubits);
        product_state(values, scratch);
        self.expectation(scratch)
    }

    /// Shift-rule gradient of the feature with respect to each window value.
    pub fn input_grad(&self, values: &[f64], rule: ShiftRule, scratch: &mut Vec<f64>) -> Vec<f64> {
        let mut shifted = values.to_vec();
        (0..values.len())
            .map(|j| {
                shifted[j] = values[j] + rule.shift;
                let plus = self.feature(&shifted, scratch);
                shifted[j] = values[j] - rule.shift;
                let minus = self.feature(&shifted, scratch);
                shifted[j] = values[j];
                rule.scale * (plus - minus)
            })
            .collect()
    }
}

/// Weighted sum of encoded-state projectors, `Σ u ψ ψᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityAccumulator {
    dim: usize,
    rho: Vec<f64>,
}

impl DensityAccumulator {
    pub fn new(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        Self {
            dim,
            rho: vec![0.0; dim * dim],
        }
    }

    pub fn add(&mut self, weight: f64, psi: &[f64]) {
        debug_assert_eq!(psi.len(), self.dim);
        if weight == 0.0 {
            return;
        }
        for (i, &pi) in psi.iter().enumerate() {
            let wi = weight * pi;
            let row = &mut self.rho[i * self.dim..(i + 1) * self.dim];
            for (r, &pj) in row.iter_mut().zip(psi) {
                *r += wi * pj;
            }
        }
    }

    pub fn merge(&mut self, other: &DensityAccumulator) {
        for (a, b) in self.rho.iter_mut().zip(&other.rho) {
            *a += b;
        }
    }

    pub fn clear(&mut self) {
        self.rho.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn matrix(&self) -> &[f64] {
        &self.rho
    }

    /// `Tr(ρ O)`.
    pub fn trace_with(&self, filter: &CompiledFilter) -> f64 {
        frobenius(&self.rho, &filter.observable)
    }

    /// Shift-rule gradient of `Tr(ρ Uᵀ Z U)` with respect to every circuit
    /// parameter. Each term evaluates the circuit with one rotation shifted.
    pub fn param_shift_grad(
        &self,
        spec: &CircuitSpec,
        params: &ParamVector,
        rule: ShiftRule,
    ) -> Result<Vec<f64>> {
        if params.len() != spec.param_count() {
            return Err(Error::shape(format!(
                "circuit expects {} parameters, got {}",
                spec.param_count(),
                params.len()
            )));
        }
        if 1usize << spec.n_qubits() != self.dim {
            return Err(Error::shape("accumulator and circuit sizes disagree"));
        }
        let dim = self.dim;
        let n = spec.n_qubits();
        let gates = compile_gates(spec, params.as_slice());
        let mut grads = vec![0.0; params.len()];
        if gates.is_empty() {
            return Ok(grads);
        }
        // suffix[k]: parity observable pulled back through gates k..L
        let mut suffix = Vec::with_capacity(gates.len() + 1);
        suffix.push(parity_diagonal(dim));
        for (g, _) in gates.iter().rev() {
            let mut next = suffix.last().unwrap().clone();
            g.transpose().conjugate(&mut next, dim);
            suffix.push(next);
        }
        suffix.reverse();
        let mut prefix = self.rho.clone();
        let mut work = vec![0.0; dim * dim];
        for (k, (g, param)) in gates.iter().enumerate() {
            if let Some((p, qubit)) = *param {
                let theta = params.as_slice()[p];
                let observable = &suffix[k + 1];
                let mut eval = |angle: f64| {
                    work.copy_from_slice(&prefix);
                    RealGate::ry(n, qubit, angle).conjugate(&mut work, dim);
                    frobenius(observable, &work)
                };
                let plus = eval(theta + rule.shift);
                let minus = eval(theta - rule.shift);
                grads[p] += rule.scale * (plus - minus);
            }
            g.conjugate(&mut prefix, dim);
        }
        Ok(grads)
    }
}
