//! Dense statevector simulation for small registers.
//!
//! Basis convention: qubit 0 is the most significant bit of the basis index.
//! For an `n`-qubit register, qubit `q` corresponds to bit `n - 1 - q`, so the
//! two-qubit basis order is `|q0 q1⟩ = 00, 01, 10, 11`.
//!
//! `Ry(θ)` uses the matrix `[[cos θ, -sin θ], [sin θ, cos θ]]` with the full
//! angle, not the half angle used by most quantum SDKs.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register `init_state` will allocate.
pub const MAX_QUBITS: usize = 24;

/// Norm drift tolerated before a state is rejected as corrupted.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Bit mask selecting `qubit` inside a basis index of an `n_qubits` register.
#[inline]
pub fn qubit_mask(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// Prepares `|0...0⟩`.
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!(
                "register must hold 1..={MAX_QUBITS} qubits, got {n_qubits}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two; normalization
    /// is not checked here.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Size(format!(
                "amplitude count must be a power of two >= 2, got {len}"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Size(format!(
                "{n_qubits} qubits exceeds {MAX_QUBITS}"
            )));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Index(format!(
                "qubit {qubit} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    pub fn apply_ry(&mut self, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let (s, c) = angle.sin_cos();
        let mask = qubit_mask(self.n_qubits, qubit);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | mask];
                self.amplitudes[i] = a0 * c - a1 * s;
                self.amplitudes[i | mask] = a0 * s + a1 * c;
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Index(format!(
                "control and target must differ, both are {control}"
            )));
        }
        let cmask = qubit_mask(self.n_qubits, control);
        let tmask = qubit_mask(self.n_qubits, target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    /// Exact `⟨ψ|Z⊗…⊗Z|ψ⟩`: the parity-signed probability sum.
    pub fn expectation_z_all(&self) -> Result<f64> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::State(format!(
                "state norm drifted to {norm}, expected 1"
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(b, a)| parity_sign(b) * a.norm_sqr())
            .sum())
    }
}

/// `(-1)^popcount(b)`.
#[inline]
pub fn parity_sign(basis: usize) -> f64 {
    if basis.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn init_state(n_qubits: usize) -> Result<Statevector> {
    Statevector::new(n_qubits)
}

pub fn apply_ry(mut state: Statevector, qubit: usize, angle: f64) -> Result<Statevector> {
    state.apply_ry(qubit, angle)?;
    Ok(state)
}

pub fn apply_cnot(mut state: Statevector, control: usize, target: usize) -> Result<Statevector> {
    state.apply_cnot(control, target)?;
    Ok(state)
}

pub fn expectation_z_all(state: &Statevector) -> Result<f64> {
    state.expectation_z_all()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn basis(n: usize, index: usize) -> Statevector {
        let mut amps = vec![c(0.0); 1 << n];
        amps[index] = c(1.0);
        Statevector::from_amplitudes(amps).unwrap()
    }

    fn assert_amps(state: &Statevector, expected: &[f64], tol: f64) {
        assert_eq!(state.amplitudes().len(), expected.len());
        for (a, e) in state.amplitudes().iter().zip(expected) {
            assert!((a - c(*e)).norm() <= tol, "{a} vs {e}");
        }
    }

    #[test]
    fn init_prepares_ground_state() {
        assert_amps(&init_state(1).unwrap(), &[1.0, 0.0], 0.0);
        let s = init_state(4).unwrap();
        assert_eq!(s.amplitudes().len(), 16);
        assert_eq!(s.amplitudes()[0], c(1.0));
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn init_rejects_bad_sizes() {
        assert!(matches!(init_state(0), Err(Error::Size(_))));
        assert!(matches!(init_state(MAX_QUBITS + 1), Err(Error::Size(_))));
    }

    #[test]
    fn ry_examples() {
        let s = apply_ry(init_state(1).unwrap(), 0, FRAC_PI_2).unwrap();
        assert_amps(&s, &[0.0, 1.0], 1e-15);
        let s = apply_ry(init_state(1).unwrap(), 0, FRAC_PI_4).unwrap();
        assert_amps(&s, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], 1e-15);
        let before = apply_ry(init_state(3).unwrap(), 1, 0.3).unwrap();
        let after = apply_ry(before.clone(), 2, 0.0).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn ry_rejects_out_of_range_qubit() {
        assert!(matches!(
            apply_ry(init_state(2).unwrap(), 2, 0.1),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn cnot_examples() {
        // |10⟩ -> |11⟩ with qubit 0 as control
        let s = apply_cnot(basis(2, 0b10), 0, 1).unwrap();
        assert_eq!(s, basis(2, 0b11));
        let s = apply_cnot(basis(2, 0b00), 0, 1).unwrap();
        assert_eq!(s, basis(2, 0b00));
    }

    #[test]
    fn cnot_on_superposition_matches_matrix() {
        let input = [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0];
        // CNOT(control=0, target=1) in the 00,01,10,11 basis.
        let cnot = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        let expected: Vec<f64> = cnot
            .iter()
            .map(|row| row.iter().zip(&input).map(|(m, v)| m * v).sum())
            .collect();
        let state = Statevector::from_amplitudes(input.iter().map(|&x| c(x)).collect()).unwrap();
        assert_amps(&apply_cnot(state, 0, 1).unwrap(), &expected, 1e-15);
    }

    #[test]
    fn cnot_rejects_bad_indices() {
        let s = init_state(2).unwrap();
        assert!(matches!(apply_cnot(s.clone(), 1, 1), Err(Error::Index(_))));
        assert!(matches!(apply_cnot(s, 0, 5), Err(Error::Index(_))));
    }

    #[test]
    fn parity_expectations() {
        assert_eq!(expectation_z_all(&basis(4, 0)).unwrap(), 1.0);
        assert_eq!(expectation_z_all(&basis(4, 0b0001)).unwrap(), -1.0);
        let uniform = Statevector::from_amplitudes(vec![c(0.25); 16]).unwrap();
        let oracle: f64 = (0..16usize)
            .map(|b| {
                if b.count_ones() % 2 == 0 {
                    1.0 / 16.0
                } else {
                    -1.0 / 16.0
                }
            })
            .sum();
        assert_eq!(oracle, 0.0);
        assert!((expectation_z_all(&uniform).unwrap() - oracle).abs() < 1e-15);
    }

    #[test]
    fn expectation_rejects_unnormalized_state() {
        let s = Statevector::from_amplitudes(vec![c(1.0), c(1.0)]).unwrap();
        assert!(matches!(expectation_z_all(&s), Err(Error::State(_))));
    }
}
