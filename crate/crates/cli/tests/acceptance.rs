//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Criteria 5-7 run the full ten-seed, thousand-iteration
//! protocol and take several minutes.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::time::Instant;

use qconv_cli::commands::{run_repro, Panel};
use qconv_cli::config::ExperimentArgs;
use qconv_core::gradcheck::{run_gradcheck, GradcheckConfig};
use qconv_core::nn::{mse_loss, one_hot, LayerSpec, Network, NetworkSpec, WindowSpec};
use qconv_core::pqc::{build_circuit, encode_window, run_circuit, ParamVector, WindowValues};
use qconv_core::tensor::{Shape, Tensor};
use qconv_core::tetris::{enumerate_configurations, generate_dataset, BACKGROUND, FOREGROUND};
use qconv_core::train::{network_spec, Architecture, Model};
use qconv_core::BrickClass;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn gradient_exactness() -> Outcome {
    let start = Instant::now();
    let report = run_gradcheck(&GradcheckConfig::default()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    check(
        report.passed() && report.instances >= 200 && secs < 10.0,
        format!(
            "{} circuits, {} components, max deviation {:.2e}, {secs:.2} s",
            report.instances, report.components, report.max_deviation
        ),
        format!(
            "max deviation {:.2e} in {secs:.2} s, worst {:?}",
            report.max_deviation, report.worst
        ),
    )
}

fn circuit_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = Pcg64::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let d = rng.gen_range(0..=4);
        let params: Vec<f64> = (0..n * d)
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let spec = build_circuit(n, d).map_err(|e| e.to_string())?;
        let input = encode_window(&WindowValues::new(values.clone()).unwrap()).unwrap();
        let out = run_circuit(&spec, &ParamVector::new(params.clone()).unwrap(), &input)
            .map_err(|e| e.to_string())?;
        let expected = oracle::apply(
            &oracle::circuit_unitary(n, d, &params),
            &oracle::encoded(&values),
        );
        for (a, b) in out.amplitudes().iter().zip(&expected) {
            worst = worst.max((a - b).norm());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-12 && secs < 5.0,
        format!("100 cases, max amplitude error {worst:.2e}, {secs:.2} s"),
        format!("max amplitude error {worst:.2e} in {secs:.2} s"),
    )
}

fn dataset_fidelity() -> Outcome {
    let counts: Vec<usize> = BrickClass::ALL
        .iter()
        .map(|&c| enumerate_configurations(c).len())
        .collect();
    let ds = generate_dataset(1000, 0).map_err(|e| e.to_string())?;
    let in_range = |p: f64| {
        (FOREGROUND.0..=FOREGROUND.1).contains(&p) || (BACKGROUND.0..=BACKGROUND.1).contains(&p)
    };
    let pixels_ok = ds.len() == 1000
        && ds
            .samples
            .iter()
            .all(|s| s.pixels.iter().all(|&p| in_range(p)));
    check(
        counts == [8, 16, 4, 8, 6] && pixels_ok,
        format!("configurations S,L,O,T,I = {counts:?}; 1000 images, all pixels in range"),
        format!("configurations {counts:?}, pixel ranges ok: {pixels_ok}"),
    )
}

fn shape_reproduction() -> Outcome {
    let shapes = |arch| {
        network_spec(arch, Model::Qccnn, 5, 4)
            .layer_shapes()
            .map(|v| {
                v.iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(" -> ")
            })
            .map_err(|e| e.to_string())
    };
    let one = shapes(Architecture::OneLayer)?;
    let two = shapes(Architecture::TwoLayer)?;
    check(
        one == "3x3x1 -> 2x2x5 -> 1x1x5 -> 1x1x5"
            && two == "3x3x1 -> 2x2x2 -> 1x1x6 -> 2x2x6 -> 1x1x5",
        format!("one-layer {one}; two-layer {two}"),
        format!("one-layer {one}; two-layer {two}"),
    )
}

fn end_to_end_backprop() -> Outcome {
    let spec = NetworkSpec {
        input: Shape::new(3, 3, 1),
        layers: vec![
            LayerSpec::QuantumConv {
                window: WindowSpec::square(2, 0),
                filters: 1,
                depth: 1,
                entangler: Default::default(),
            },
            LayerSpec::MaxPool {
                window: WindowSpec::square(2, 0),
                mode: Default::default(),
            },
            LayerSpec::Dense { out_dim: 2 },
        ],
        n_classes: 2,
    };
    let mut rng = Pcg64::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut count = 0;
    for trial in 0..5 {
        let mut net = Network::new(spec.clone(), &mut rng).map_err(|e| e.to_string())?;
        let x = Tensor::new(
            spec.input,
            (0..9).map(|_| rng.gen_range(0.0..1.0)).collect(),
        )
        .unwrap();
        let target = one_hot(trial % 2, 2);
        let (pred, trace) = net.forward(&x).unwrap();
        let (_, g) = mse_loss(&pred, &target).unwrap();
        let mut grads = net.new_gradients();
        net.backward(&trace, &g, &mut grads).unwrap();
        let analytic = net.gradients_flat(&grads).unwrap();
        let base = net.params_flat();
        let h = 1e-5;
        for i in 0..base.len() {
            let mut loss_at = |delta: f64| {
                let mut p = base.clone();
                p[i] += delta;
                net.set_params_flat(&p).unwrap();
                mse_loss(&net.predict(&x).unwrap(), &target).unwrap().0
            };
            let fd = (loss_at(h) - loss_at(-h)) / (2.0 * h);
            worst = worst.max((analytic[i] - fd).abs());
            count += 1;
        }
    }
    check(
        worst <= 1e-5,
        format!("{count} parameters over 5 networks, max deviation {worst:.2e}"),
        format!("max deviation {worst:.2e}"),
    )
}

fn determinism() -> Outcome {
    let args = ExperimentArgs {
        seeds: Some(2),
        iterations: Some(20),
        eval_every: Some(5),
        ..Default::default()
    };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = run_repro(&args, &Panel::ALL, &a).map_err(|e| e.to_string())?;
    run_repro(&args, &Panel::ALL, &b).map_err(|e| e.to_string())?;
    let mut compared = 0;
    for path in first
        .files
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
    {
        let name = path.file_name().unwrap();
        let x = std::fs::read(a.join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(name)).map_err(|e| e.to_string())?;
        if x != y {
            return Err(format!("{} differs between runs", name.to_string_lossy()));
        }
        compared += 1;
    }
    check(
        compared == 4,
        format!("{compared} panel CSVs byte-identical across two runs"),
        format!("only {compared} CSVs produced"),
    )
}

struct Protocol {
    accuracy: Vec<(usize, Model, Architecture, f64)>,
    lines: Vec<String>,
    comparisons: Vec<(usize, Architecture, f64, f64, Vec<u64>)>,
}

fn full_protocol() -> Result<Protocol, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let outcome = run_repro(&ExperimentArgs::default(), &Panel::ALL, dir.path())
        .map_err(|e| e.to_string())?;
    let s = outcome.summary;
    let mut lines = vec![format!(
        "protocol: {} seeds x {} iterations, {:.0} s",
        s.seeds.len(),
        s.iterations,
        start.elapsed().as_secs_f64()
    )];
    for e in &s.experiments {
        lines.push(format!(
            "  {}-label {} {}: test accuracy {:.4}, train loss {:.4}",
            e.labels, e.model, e.arch, e.final_mean_test_accuracy, e.final_mean_train_loss
        ));
    }
    Ok(Protocol {
        accuracy: s
            .experiments
            .iter()
            .map(|e| (e.labels, e.model, e.arch, e.final_mean_test_accuracy))
            .collect(),
        lines,
        comparisons: s
            .loss_comparisons
            .iter()
            .map(|c| {
                (
                    c.labels,
                    c.arch,
                    c.qccnn_train_loss,
                    c.cnn_train_loss,
                    c.discrepant_seeds.clone(),
                )
            })
            .collect(),
    })
}

fn accuracy_at_least(p: &Protocol, labels: usize, arch: Architecture, min: f64) -> Outcome {
    let acc = p
        .accuracy
        .iter()
        .find(|(l, m, a, _)| *l == labels && *m == Model::Qccnn && *a == arch)
        .map(|e| e.3)
        .ok_or("experiment missing")?;
    check(
        acc >= min,
        format!("{labels}-label {arch} QCCNN mean test accuracy {acc:.4} >= {min}"),
        format!("{labels}-label {arch} QCCNN mean test accuracy {acc:.4} < {min}"),
    )
}

fn comparative_loss(p: &Protocol) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (labels, arch, q, c, seeds) in &p.comparisons {
        ok &= q < c;
        let mut part = format!("{labels}-label {arch} {q:.4} vs {c:.4}");
        if !seeds.is_empty() {
            part.push_str(&format!(" (discrepant seeds {seeds:?})"));
        }
        parts.push(part);
    }
    let text = format!("QCCNN vs CNN final mean train loss: {}", parts.join("; "));
    check(ok && p.comparisons.len() == 4, text.clone(), text)
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "gradient exactness", gradient_exactness()),
        (2, "circuit oracle equivalence", circuit_oracle()),
        (3, "dataset fidelity", dataset_fidelity()),
        (4, "shape reproduction", shape_reproduction()),
    ];
    match full_protocol() {
        Ok(p) => {
            for line in &p.lines {
                println!("{line}");
            }
            results.push((
                5,
                "2-label convergence",
                accuracy_at_least(&p, 2, Architecture::OneLayer, 0.95),
            ));
            results.push((
                6,
                "5-label convergence",
                accuracy_at_least(&p, 5, Architecture::TwoLayer, 0.90),
            ));
            results.push((7, "comparative loss", comparative_loss(&p)));
        }
        Err(e) => {
            for (n, name) in [
                (5, "2-label convergence"),
                (6, "5-label convergence"),
                (7, "comparative loss"),
            ] {
                results.push((n, name, Err(e.clone())));
            }
        }
    }
    results.push((8, "end-to-end backprop", end_to_end_backprop()));
    results.push((9, "determinism", determinism()));

    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(msg) => println!("criterion {n} ({name}): PASS: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL: {msg}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
