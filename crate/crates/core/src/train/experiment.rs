//! The reference experiments: one- and two-layer networks, quantum or
//! classical filters, on the 2-label (S, T) or 5-label Tetris task.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::pool::PoolMode;
use crate::nn::{LayerSpec, Network, NetworkSpec, WindowSpec};
use crate::pqc::Entangler;
use crate::tensor::Shape;
use crate::tetris::{filter_labels, generate_dataset, split, GRID};
use crate::train::trainer::{train, MetricsRecord, TrainConfig};

/// Offset separating the weight-initialisation stream from the data stream.
const INIT_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    OneLayer,
    TwoLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Qccnn,
    Cnn,
}

macro_rules! string_enum {
    ($ty:ty, $field:literal, $($name:literal => $variant:expr),+) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    other => Err(Error::config($field, format!("unknown value `{other}`"))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $variant { return f.write_str($name); })+
                unreachable!()
            }
        }
    };
}

string_enum!(Architecture, "arch", "one-layer" => Architecture::OneLayer, "two-layer" => Architecture::TwoLayer);
string_enum!(Model, "model", "qccnn" => Model::Qccnn, "cnn" => Model::Cnn);

/// Class subsets used by the experiments.
pub fn label_names(labels: usize) -> Result<&'static [&'static str]> {
    match labels {
        2 => Ok(&["S", "T"]),
        5 => Ok(&["S", "L", "O", "T", "I"]),
        other => Err(Error::config(
            "labels",
            format!("expected 2 or 5, got {other}"),
        )),
    }
}

/// One layer: conv(k=5) → pool → dense. Two layers: conv(k=2) → conv(k=3) →
/// pool with padding 1 → dense. All windows 2×2 with stride 1; pooling is max.
pub fn network_spec(
    arch: Architecture,
    model: Model,
    n_classes: usize,
    depth: usize,
) -> NetworkSpec {
    network_spec_with(
        arch,
        model,
        n_classes,
        depth,
        Entangler::Ladder,
        PoolMode::Max,
    )
}

pub fn network_spec_with(
    arch: Architecture,
    model: Model,
    n_classes: usize,
    depth: usize,
    entangler: Entangler,
    pool: PoolMode,
) -> NetworkSpec {
    let window = WindowSpec::square(2, 0);
    let conv = |filters| match model {
        Model::Qccnn => LayerSpec::QuantumConv {
            window,
            filters,
            depth,
            entangler,
        },
        Model::Cnn => LayerSpec::ClassicalConv {
            window,
            filters,
            relu: true,
        },
    };
    let layers = match arch {
        Architecture::OneLayer => vec![
            conv(5),
            LayerSpec::MaxPool { window, mode: pool },
            LayerSpec::Dense { out_dim: n_classes },
        ],
        Architecture::TwoLayer => vec![
            conv(2),
            conv(3),
            LayerSpec::MaxPool {
                window: WindowSpec::square(2, 1),
                mode: pool,
            },
            LayerSpec::Dense { out_dim: n_classes },
        ],
    };
    NetworkSpec {
        input: Shape::new(GRID, GRID, 1),
        layers,
        n_classes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub arch: Architecture,
    pub model: Model,
    pub labels: usize,
    pub dataset_size: usize,
    pub train_fraction: f64,
    pub depth: usize,
    pub entangler: Entangler,
    pub pool: PoolMode,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
}

impl ExperimentSpec {
    pub fn new(arch: Architecture, model: Model, labels: usize) -> Self {
        Self {
            arch,
            model,
            labels,
            dataset_size: 1000,
            train_fraction: 0.8,
            depth: 4,
            entangler: Entangler::Ladder,
            pool: PoolMode::Max,
            seeds: (0..10).collect(),
            train: TrainConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        label_names(self.labels)?;
        self.train.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if self.dataset_size == 0 {
            return Err(Error::config("dataset_size", "must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn network_spec(&self) -> NetworkSpec {
        network_spec_with(
            self.arch,
            self.model,
            self.labels,
            self.depth,
            self.entangler,
            self.pool,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub records: Vec<MetricsRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub runs: Vec<SeedRun>,
    /// Per-iteration mean over seeds.
    pub mean: Vec<MetricsRecord>,
}

impl ExperimentResult {
    pub fn final_mean(&self) -> MetricsRecord {
        *self.mean.last().expect("experiments record at least once")
    }
}

/// Dataset generation, split and initialisation all derive from `seed`.
pub fn run_seed(spec: &ExperimentSpec, seed: u64) -> Result<SeedRun> {
    let full = generate_dataset(spec.dataset_size, seed)?;
    let (train_set, test_set) = split(&full, spec.train_fraction, seed)?;
    let names = label_names(spec.labels)?;
    let train_set = filter_labels(&train_set, names)?;
    let test_set = filter_labels(&test_set, names)?;
    let mut rng = Pcg64::seed_from_u64(seed.wrapping_add(INIT_STREAM));
    let mut net = Network::new(spec.network_spec(), &mut rng)?;
    let records = train(&mut net, &train_set, &test_set, &spec.train, seed)?;
    Ok(SeedRun { seed, records })
}

pub fn mean_records(runs: &[SeedRun]) -> Vec<MetricsRecord> {
    let n = runs.len() as f64;
    let len = runs.iter().map(|r| r.records.len()).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let mut acc = MetricsRecord {
                iteration: runs[0].records[i].iteration,
                train_loss: 0.0,
                test_loss: 0.0,
                test_accuracy: 0.0,
            };
            for r in runs {
                let rec = &r.records[i];
                acc.train_loss += rec.train_loss;
                acc.test_loss += rec.test_loss;
                acc.test_accuracy += rec.test_accuracy;
            }
            acc.train_loss /= n;
            acc.test_loss /= n;
            acc.test_accuracy /= n;
            acc
        })
        .collect()
}

/// Runs every seed (in parallel when threads are available) and averages.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let runs = spec
        .seeds
        .par_iter()
        .map(|&seed| run_seed(spec, seed))
        .collect::<Result<Vec<_>>>()?;
    let mean = mean_records(&runs);
    Ok(ExperimentResult {
        spec: spec.clone(),
        runs,
        mean,
    })
}
