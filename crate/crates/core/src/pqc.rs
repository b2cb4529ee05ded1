//! The layered Ry/CNOT parametric circuit used by quantum filters, the
//! qubit encoding of window values, and exact shift-rule gradients.
//!
//! Layout: `depth` repetitions of `[Ry on every qubit, CNOT ladder]`, with no
//! trailing rotation layer. Parameters are ordered by (block, qubit).

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::Statevector;

/// How the two-qubit layer pairs nearest neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Entangler {
    /// `0→1, 1→2, …, N−2→N−1`, in that order.
    #[default]
    Ladder,
    /// Even pairs `(0,1), (2,3), …` followed by odd pairs `(1,2), (3,4), …`.
    BrickWall,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// Rotation driven by trainable parameter `param`.
    Ry {
        qubit: usize,
        param: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CircuitLayer {
    Rotations(Vec<Gate>),
    Entangling(Vec<Gate>),
}

impl CircuitLayer {
    pub fn gates(&self) -> &[Gate] {
        match self {
            CircuitLayer::Rotations(g) | CircuitLayer::Entangling(g) => g,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    n_qubits: usize,
    depth: usize,
    entangler: Entangler,
    layers: Vec<CircuitLayer>,
}

impl CircuitSpec {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Number of CNOT layers.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn entangler(&self) -> Entangler {
        self.entangler
    }

    pub fn layers(&self) -> &[CircuitLayer] {
        &self.layers
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> + '_ {
        self.layers.iter().flat_map(|l| l.gates().iter())
    }

    pub fn param_count(&self) -> usize {
        self.n_qubits * self.depth
    }

    pub fn cnot_count(&self) -> usize {
        self.gates()
            .filter(|g| matches!(g, Gate::Cnot { .. }))
            .count()
    }

    pub fn gate_count(&self) -> usize {
        self.gates().count()
    }

    fn check_params(&self, params: &ParamVector) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::shape(format!(
                "circuit expects {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        Ok(())
    }

    fn check_window(&self, window: &WindowValues) -> Result<()> {
        if window.len() != self.n_qubits {
            return Err(Error::shape(format!(
                "circuit has {} qubits, window has {} values",
                self.n_qubits,
                window.len()
            )));
        }
        Ok(())
    }
}

/// Trainable rotation angles, radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if let Some(i) = angles.iter().position(|a| !a.is_finite()) {
            return Err(Error::domain(format!("parameter {i} is not finite")));
        }
        Ok(Self(angles))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Window values used directly as encoding angles, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowValues(Vec<f64>);

impl WindowValues {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|a| !a.is_finite()) {
            return Err(Error::domain(format!("window value {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// A two-point shift rule: `scale * (f(θ + shift) − f(θ − shift))`.
///
/// For `Ry(θ) = exp(−iθY)` the feature is a trigonometric polynomial in `2θ`,
/// so `f(θ+s) − f(θ−s) = sin(2s) · f'(θ)`. The exact rule is therefore
/// `shift = π/4, scale = 1`, which is the familiar `±π/2, ½` rule expressed in
/// the half-angle parametrisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftRule {
    pub shift: f64,
    pub scale: f64,
}

impl ShiftRule {
    pub const EXACT: ShiftRule = ShiftRule {
        shift: FRAC_PI_4,
        scale: 1.0,
    };

    /// Exact rule for an arbitrary shift `s` with `sin(2s) ≠ 0`.
    pub fn with_shift(shift: f64) -> Result<Self> {
        let denom = (2.0 * shift).sin();
        if denom.abs() < 1e-9 {
            return Err(Error::domain(format!(
                "shift {shift} makes the two-point rule singular"
            )));
        }
        Ok(Self {
            shift,
            scale: 1.0 / denom,
        })
    }
}

impl Default for ShiftRule {
    fn default() -> Self {
        Self::EXACT
    }
}

pub fn build_circuit(n_qubits: usize, depth: usize) -> Result<CircuitSpec> {
    build_circuit_with(n_qubits, depth, Entangler::Ladder)
}

pub fn build_circuit_with(
    n_qubits: usize,
    depth: usize,
    entangler: Entangler,
) -> Result<CircuitSpec> {
    if n_qubits == 0 {
        return Err(Error::Size("circuit needs at least one qubit".into()));
    }
    let pairs: Vec<(usize, usize)> = match entangler {
        Entangler::Ladder => (0..n_qubits.saturating_sub(1))
            .map(|i| (i, i + 1))
            .collect(),
        Entangler::BrickWall => (0..n_qubits.saturating_sub(1))
            .step_by(2)
            .chain((1..n_qubits.saturating_sub(1)).step_by(2))
            .map(|i| (i, i + 1))
            .collect(),
    };
    let mut layers = Vec::with_capacity(2 * depth);
    for block in 0..depth {
        layers.push(CircuitLayer::Rotations(
            (0..n_qubits)
                .map(|q| Gate::Ry {
                    qubit: q,
                    param: block * n_qubits + q,
                })
                .collect(),
        ));
        layers.push(CircuitLayer::Entangling(
            pairs
                .iter()
                .map(|&(control, target)| Gate::Cnot { control, target })
                .collect(),
        ));
    }
    Ok(CircuitSpec {
        n_qubits,
        depth,
        entangler,
        layers,
    })
}

/// Product state `⊗_j (cos v_j |0⟩ + sin v_j |1⟩)`, built by rotating `|0…0⟩`.
pub fn encode_window(values: &WindowValues) -> Result<Statevector> {
    let mut state = Statevector::new(values.len())?;
    for (q, &v) in values.as_slice().iter().enumerate() {
        state.apply_ry(q, v)?;
    }
    Ok(state)
}

pub fn run_circuit(
    spec: &CircuitSpec,
    params: &ParamVector,
    input: &Statevector,
) -> Result<Statevector> {
    spec.check_params(params)?;
    if input.n_qubits() != spec.n_qubits {
        return Err(Error::shape(format!(
            "circuit has {} qubits, state has {}",
            spec.n_qubits,
            input.n_qubits()
        )));
    }
    let mut state = input.clone();
    for gate in spec.gates() {
        match *gate {
            Gate::Ry { qubit, param } => state.apply_ry(qubit, params.as_slice()[param])?,
            Gate::Cnot { control, target } => state.apply_cnot(control, target)?,
        }
    }
    Ok(state)
}

/// `⟨ψ_out|Z^⊗N|ψ_out⟩` for the encoded window pushed through the circuit.
pub fn quantum_feature(
    spec: &CircuitSpec,
    params: &ParamVector,
    window: &WindowValues,
) -> Result<f64> {
    spec.check_window(window)?;
    let out = run_circuit(spec, params, &encode_window(window)?)?;
    out.expectation_z_all()
}

pub fn param_shift_grad(
    spec: &CircuitSpec,
    params: &ParamVector,
    window: &WindowValues,
) -> Result<Vec<f64>> {
    param_shift_grad_with(spec, params, window, ShiftRule::EXACT)
}

pub fn param_shift_grad_with(
    spec: &CircuitSpec,
    params: &ParamVector,
    window: &WindowValues,
    rule: ShiftRule,
) -> Result<Vec<f64>> {
    spec.check_params(params)?;
    spec.check_window(window)?;
    let mut shifted = params.clone();
    (0..params.len())
        .map(|j| {
            let theta = params.as_slice()[j];
            shifted.as_mut_slice()[j] = theta + rule.shift;
            let plus = quantum_feature(spec, &shifted, window)?;
            shifted.as_mut_slice()[j] = theta - rule.shift;
            let minus = quantum_feature(spec, &shifted, window)?;
            shifted.as_mut_slice()[j] = theta;
            Ok(rule.scale * (plus - minus))
        })
        .collect()
}

/// Gradient with respect to the window values. The encoding rotations are
/// `Ry` gates too, so the same shift rule applies to them.
pub fn input_grad(
    spec: &CircuitSpec,
    params: &ParamVector,
    window: &WindowValues,
) -> Result<Vec<f64>> {
    input_grad_with(spec, params, window, ShiftRule::EXACT)
}

pub fn input_grad_with(
    spec: &CircuitSpec,
    params: &ParamVector,
    window: &WindowValues,
    rule: ShiftRule,
) -> Result<Vec<f64>> {
    spec.check_params(params)?;
    spec.check_window(window)?;
    let mut shifted = window.as_slice().to_vec();
    (0..window.len())
        .map(|j| {
            let v = window.as_slice()[j];
            shifted[j] = v + rule.shift;
            let plus = quantum_feature(spec, params, &WindowValues(shifted.clone()))?;
            shifted[j] = v - rule.shift;
            let minus = quantum_feature(spec, params, &WindowValues(shifted.clone()))?;
            shifted[j] = v;
            Ok(rule.scale * (plus - minus))
        })
        .collect()
}
