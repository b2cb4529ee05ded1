//! Short training runs: determinism, progress and dataset round trips.

use proptest::prelude::*;
use qconv_core::tetris::{generate_dataset, read_dataset, split, write_dataset};
use qconv_core::train::{run_experiment, run_seed, Architecture, ExperimentSpec, Model};

fn short(arch: Architecture, model: Model, labels: usize, iterations: usize) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(arch, model, labels);
    spec.train.iterations = iterations;
    spec.train.eval_every = 5;
    spec.seeds = vec![0, 1];
    spec
}

#[test]
fn runs_are_bit_reproducible() {
    for model in [Model::Qccnn, Model::Cnn] {
        let spec = short(Architecture::TwoLayer, model, 5, 10);
        assert_eq!(
            run_experiment(&spec).unwrap(),
            run_experiment(&spec).unwrap()
        );
    }
}

#[test]
fn minibatch_runs_are_reproducible_and_seed_dependent() {
    let mut spec = short(Architecture::OneLayer, Model::Qccnn, 2, 10);
    spec.train.batch_size = Some(32);
    let a = run_seed(&spec, 3).unwrap();
    assert_eq!(a, run_seed(&spec, 3).unwrap());
    assert_ne!(a.records, run_seed(&spec, 4).unwrap().records);
}

#[test]
fn training_reduces_loss() {
    let spec = short(Architecture::OneLayer, Model::Qccnn, 2, 60);
    let result = run_experiment(&spec).unwrap();
    let first = result.mean.first().unwrap();
    let last = result.final_mean();
    assert_eq!(last.iteration, 60);
    assert!(last.train_loss < first.train_loss, "{first:?} -> {last:?}");
    assert_eq!(result.mean.len(), 12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn jsonl_round_trip(n in 1usize..60, seed in any::<u64>(), frac in 0.2..0.8f64) {
        let ds = generate_dataset(n.max(2), seed).unwrap();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        prop_assert_eq!(&read_dataset(&buf[..]).unwrap(), &ds);
        if let Ok((train, test)) = split(&ds, frac, seed) {
            prop_assert_eq!(train.len() + test.len(), ds.len());
        }
    }
}
