use criterion::{black_box, criterion_group, criterion_main, Criterion};
use qconv_core::filter::{product_state, DensityAccumulator};
use qconv_core::train::{batch_gradient, network_spec};
use qconv_core::{
    build_circuit, param_shift_grad, quantum_feature, Architecture, CompiledFilter, Model, Network,
    ParamVector, ShiftRule, WindowValues,
};
use rand::SeedableRng;
use rand_pcg::Pcg64;

fn circuit_kernels(c: &mut Criterion) {
    let spec = build_circuit(4, 4).unwrap();
    let params = ParamVector::new((0..16).map(|i| 0.37 * i as f64).collect()).unwrap();
    let window = WindowValues::new(vec![0.9, 0.05, 0.8, 0.75]).unwrap();

    c.bench_function("statevector_feature_n4_d4", |b| {
        b.iter(|| quantum_feature(&spec, &params, black_box(&window)).unwrap())
    });
    c.bench_function("statevector_param_shift_n4_d4", |b| {
        b.iter(|| param_shift_grad(&spec, &params, black_box(&window)).unwrap())
    });

    let filter = CompiledFilter::new(&spec, &params).unwrap();
    let mut scratch = Vec::new();
    c.bench_function("compiled_feature_n4", |b| {
        b.iter(|| filter.feature(black_box(window.as_slice()), &mut scratch))
    });
    c.bench_function("compile_filter_n4_d4", |b| {
        b.iter(|| CompiledFilter::new(&spec, black_box(&params)).unwrap())
    });

    let mut acc = DensityAccumulator::new(4);
    let mut psi = Vec::new();
    product_state(window.as_slice(), &mut psi);
    acc.add(0.5, &psi);
    c.bench_function("density_param_shift_n4_d4", |b| {
        b.iter(|| {
            acc.param_shift_grad(&spec, black_box(&params), ShiftRule::EXACT)
                .unwrap()
        })
    });
}

fn training_step(c: &mut Criterion) {
    let data = qconv_core::tetris::generate_dataset(1000, 0).unwrap();
    let indices: Vec<usize> = (0..800).collect();
    for arch in [Architecture::OneLayer, Architecture::TwoLayer] {
        let net = Network::new(
            network_spec(arch, Model::Qccnn, 5, 4),
            &mut Pcg64::seed_from_u64(1),
        )
        .unwrap();
        c.bench_function(&format!("full_batch_gradient_{arch}"), |b| {
            b.iter(|| batch_gradient(&net, &data, black_box(&indices)).unwrap())
        });
    }
}

criterion_group!(benches, circuit_kernels, training_step);
criterion_main!(benches);
