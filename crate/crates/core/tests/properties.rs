//! Property tests for the simulator, the circuit layer and gradients.

mod common;

use common::oracle;
use num_complex::Complex64;
use proptest::prelude::*;
use qconv_core::filter::{product_state, CompiledFilter, DensityAccumulator};
use qconv_core::pqc::{
    build_circuit, encode_window, input_grad, param_shift_grad, quantum_feature, run_circuit,
    ParamVector, ShiftRule, WindowValues,
};
use qconv_core::statevector::Statevector;

const TAU: f64 = std::f64::consts::TAU;

fn random_state(n: usize, seed: &[f64]) -> Statevector {
    let amps: Vec<Complex64> = (0..1usize << n)
        .map(|i| Complex64::new(seed[(2 * i) % seed.len()], seed[(2 * i + 1) % seed.len()]))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    Statevector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn circuit_case() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>)> {
    (prop::sample::select(vec![1usize, 2, 3, 4]), 0usize..=4).prop_flat_map(|(n, d)| {
        (
            Just(n),
            Just(d),
            prop::collection::vec(0.0..TAU, n * d),
            prop::collection::vec(0.0..1.0f64, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gates_preserve_norm(
        n in 1usize..=5,
        seed in prop::collection::vec(-1.0..1.0f64, 8).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 0.1)),
        ops in prop::collection::vec((0usize..5, 0usize..5, -10.0..10.0f64, any::<bool>()), 1..30),
    ) {
        let mut s = random_state(n, &seed);
        for (a, b, angle, is_ry) in ops {
            let (a, b) = (a % n, b % n);
            if is_ry {
                s.apply_ry(a, angle).unwrap();
            } else if a != b {
                s.apply_cnot(a, b).unwrap();
            }
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let z = s.expectation_z_all().unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&z));
    }

    #[test]
    fn cnot_is_an_involution_and_ry_inverts(
        n in 2usize..=5,
        c in 0usize..5,
        t in 0usize..5,
        angle in -10.0..10.0f64,
        seed in prop::collection::vec(-1.0..1.0f64, 6).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 0.1)),
    ) {
        let (c, t) = (c % n, t % n);
        prop_assume!(c != t);
        let s0 = random_state(n, &seed);
        let mut s = s0.clone();
        s.apply_cnot(c, t).unwrap();
        s.apply_cnot(c, t).unwrap();
        s.apply_ry(t, angle).unwrap();
        s.apply_ry(t, -angle).unwrap();
        for (a, b) in s.amplitudes().iter().zip(s0.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn run_circuit_matches_dense_oracle((n, d, params, values) in circuit_case()) {
        let spec = build_circuit(n, d).unwrap();
        let pv = ParamVector::new(params.clone()).unwrap();
        let wv = WindowValues::new(values.clone()).unwrap();
        let out = run_circuit(&spec, &pv, &encode_window(&wv).unwrap()).unwrap();
        let expected = oracle::apply(&oracle::circuit_unitary(n, d, &params), &oracle::encoded(&values));
        for (a, b) in out.amplitudes().iter().zip(&expected) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        let f = quantum_feature(&spec, &pv, &wv).unwrap();
        prop_assert!((f - oracle::parity_expectation(&expected)).abs() < 1e-12);
        prop_assert!(f.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn shift_rule_matches_finite_differences((n, d, params, values) in circuit_case()) {
        let spec = build_circuit(n, d).unwrap();
        let pv = ParamVector::new(params.clone()).unwrap();
        let wv = WindowValues::new(values.clone()).unwrap();
        let h = 1e-5;
        let grad = param_shift_grad(&spec, &pv, &wv).unwrap();
        prop_assert_eq!(grad.len(), n * d);
        for (j, g) in grad.iter().enumerate() {
            let (mut p, mut m) = (params.clone(), params.clone());
            p[j] += h;
            m[j] -= h;
            let fd = (oracle::feature(n, d, &p, &values) - oracle::feature(n, d, &m, &values)) / (2.0 * h);
            prop_assert!((g - fd).abs() < 1e-6, "param {}: {} vs {}", j, g, fd);
        }
        for (j, g) in input_grad(&spec, &pv, &wv).unwrap().iter().enumerate() {
            let (mut p, mut m) = (values.clone(), values.clone());
            p[j] += h;
            m[j] -= h;
            let fd = (oracle::feature(n, d, &params, &p) - oracle::feature(n, d, &params, &m)) / (2.0 * h);
            prop_assert!((g - fd).abs() < 1e-6, "input {}: {} vs {}", j, g, fd);
        }
    }

    #[test]
    fn any_nondegenerate_shift_is_exact(
        (n, d, params, values) in circuit_case(),
        shift in 0.1..1.4f64,
    ) {
        prop_assume!(d > 0);
        let spec = build_circuit(n, d).unwrap();
        let pv = ParamVector::new(params).unwrap();
        let wv = WindowValues::new(values).unwrap();
        let exact = param_shift_grad(&spec, &pv, &wv).unwrap();
        let rule = ShiftRule::with_shift(shift).unwrap();
        let other = qconv_core::pqc::param_shift_grad_with(&spec, &pv, &wv, rule).unwrap();
        for (a, b) in exact.iter().zip(&other) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn compiled_filter_and_density_agree((n, d, params, values) in circuit_case(), weights in prop::collection::vec(-2.0..2.0f64, 3)) {
        let spec = build_circuit(n, d).unwrap();
        let pv = ParamVector::new(params.clone()).unwrap();
        let filter = CompiledFilter::new(&spec, &pv).unwrap();
        let mut scratch = Vec::new();
        prop_assert!((filter.feature(&values, &mut scratch) - oracle::feature(n, d, &params, &values)).abs() < 1e-12);

        // Weighted sum over shifted copies of the window.
        let windows: Vec<Vec<f64>> = (0..3).map(|k| values.iter().map(|v| v + 0.3 * k as f64).collect()).collect();
        let mut acc = DensityAccumulator::new(n);
        let mut psi = Vec::new();
        let mut expected = vec![0.0; n * d];
        for (w, win) in weights.iter().zip(&windows) {
            product_state(win, &mut psi);
            acc.add(*w, &psi);
            let g = param_shift_grad(&spec, &pv, &WindowValues::new(win.clone()).unwrap()).unwrap();
            for (e, gi) in expected.iter_mut().zip(g) {
                *e += w * gi;
            }
        }
        let got = acc.param_shift_grad(&spec, &pv, ShiftRule::EXACT).unwrap();
        for (a, b) in got.iter().zip(&expected) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
