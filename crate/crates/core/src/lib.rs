//! Hybrid quantum-classical convolutional networks.
//!
//! Quantum filters encode each image window into a small qubit register,
//! evolve it with a layered `Ry`/CNOT circuit and read out the all-qubit
//! parity `⟨Z^⊗N⟩`. Everything is simulated exactly on dense statevectors,
//! and circuit gradients come from the two-point shift rule.

pub mod error;
pub mod filter;
pub mod gradcheck;
pub mod nn;
pub mod pqc;
pub mod statevector;
pub mod tensor;
pub mod tetris;
pub mod train;

pub use error::{Error, Result};
pub use filter::CompiledFilter;
pub use nn::{LayerSpec, Network, NetworkSpec, WindowSpec};
pub use pqc::{
    build_circuit, encode_window, input_grad, param_shift_grad, quantum_feature, run_circuit,
    CircuitSpec, ParamVector, ShiftRule, WindowValues,
};
pub use statevector::Statevector;
pub use tensor::{Shape, Tensor};
pub use tetris::{BrickClass, Dataset, Sample};
pub use train::{
    run_experiment, Architecture, ExperimentResult, ExperimentSpec, MetricsRecord, Model,
    TrainConfig,
};
