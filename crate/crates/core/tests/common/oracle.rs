//! Dense-matrix reference simulator built from Kronecker products, sharing
//! no code with the library's in-place gate kernels.

#![allow(dead_code)]

use num_complex::Complex64;

pub type Matrix = Vec<Vec<Complex64>>;

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn apply(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn ry(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    vec![
        vec![Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        vec![Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

/// `I ⊗ … ⊗ g ⊗ … ⊗ I` with qubit 0 leftmost (most significant).
pub fn single(n: usize, qubit: usize, g: &Matrix) -> Matrix {
    let mut m = identity(1);
    for q in 0..n {
        m = kron(&m, &if q == qubit { g.clone() } else { identity(2) });
    }
    m
}

/// `|0⟩⟨0|_c ⊗ I + |1⟩⟨1|_c ⊗ X_t`.
pub fn cnot(n: usize, control: usize, target: usize) -> Matrix {
    let zero = vec![
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
    ];
    let one = vec![
        vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ];
    let x = vec![
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    ];
    let mut a = identity(1);
    let mut b = identity(1);
    for q in 0..n {
        a = kron(
            &a,
            &if q == control {
                zero.clone()
            } else {
                identity(2)
            },
        );
        b = kron(
            &b,
            &if q == control {
                one.clone()
            } else if q == target {
                x.clone()
            } else {
                identity(2)
            },
        );
    }
    a.iter()
        .zip(&b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

/// Layered ansatz: per block, `Ry(θ[b·n + q])` on every qubit then CNOTs
/// `0→1, 1→2, …`.
pub fn circuit_unitary(n: usize, depth: usize, params: &[f64]) -> Matrix {
    let mut u = identity(1 << n);
    for b in 0..depth {
        for q in 0..n {
            u = matmul(&single(n, q, &ry(params[b * n + q])), &u);
        }
        for q in 0..n.saturating_sub(1) {
            u = matmul(&cnot(n, q, q + 1), &u);
        }
    }
    u
}

/// Encoded product state `⊗ (cos v|0⟩ + sin v|1⟩)`.
pub fn encoded(values: &[f64]) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(1.0, 0.0)];
    for &x in values {
        let (s, c) = x.sin_cos();
        v = v.iter().flat_map(|a| [a * c, a * s]).collect();
    }
    v
}

/// `⟨Z^⊗n⟩` by direct parity count.
pub fn parity_expectation(state: &[Complex64]) -> f64 {
    state
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let sign = if i.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            sign * a.norm_sqr()
        })
        .sum()
}

pub fn feature(n: usize, depth: usize, params: &[f64], values: &[f64]) -> f64 {
    parity_expectation(&apply(&circuit_unitary(n, depth, params), &encoded(values)))
}
