//! Experiment configuration: built-in defaults, then a flat TOML file, then
//! command-line flags, each overriding the previous.

use std::path::Path;

use clap::Args;
use qconv_core::nn::PoolMode;
use qconv_core::pqc::Entangler;
use qconv_core::train::{Architecture, ExperimentSpec, Model};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.trim().to_ascii_lowercase()))
        .map_err(|e| e.to_string())
}

/// Every field is optional so that layers can be merged.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentArgs {
    /// Model family: qccnn or cnn [default: qccnn]
    #[arg(long)]
    pub model: Option<Model>,
    /// Architecture: one-layer or two-layer [default: one-layer]
    #[arg(long)]
    pub arch: Option<Architecture>,
    /// Number of labels: 2 (S, T) or 5 (S, L, O, T, I) [default: 2]
    #[arg(long)]
    pub labels: Option<usize>,
    /// Images generated per seed before splitting [default: 1000]
    #[arg(long)]
    pub dataset_size: Option<usize>,
    /// Fraction of images used for training [default: 0.8]
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Number of seeds, run as first_seed, first_seed+1, ... [default: 10]
    #[arg(long)]
    pub seeds: Option<u64>,
    /// First seed [default: 0]
    #[arg(long)]
    pub first_seed: Option<u64>,
    /// Training iterations [default: 1000]
    #[arg(long)]
    pub iterations: Option<usize>,
    /// ADAM learning rate; beta1=0.9, beta2=0.999, eps=1e-8 are fixed [default: 0.01]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Mini-batch size; omitted means full batch [default: full batch]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Iterations between metric records; the last iteration is always recorded [default: 10]
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Quantum circuit depth (Ry layer + CNOT layer blocks) [default: 4]
    #[arg(long)]
    pub depth: Option<usize>,
    /// CNOT pairing: ladder (0→1, 1→2, ...) or brick-wall [default: ladder]
    #[arg(long, value_parser = parse_enum::<Entangler>)]
    pub entangler: Option<Entangler>,
    /// Pooling: max (ties to first cell, padding reads 0) or average [default: max]
    #[arg(long, value_parser = parse_enum::<PoolMode>)]
    pub pool: Option<PoolMode>,
}

macro_rules! merge_fields {
    ($lo:expr, $hi:expr, $($f:ident),+) => {
        ExperimentArgs { $($f: $hi.$f.or($lo.$f),)+ }
    };
}

impl ExperimentArgs {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text)
            .map_err(|e| CliError::Config(format!("config error in config file: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::io_error(path, e))?;
        Self::from_toml(&text)
    }

    /// Values in `over` win over values in `self`.
    pub fn overridden_by(&self, over: &Self) -> Self {
        merge_fields!(
            self,
            over,
            model,
            arch,
            labels,
            dataset_size,
            train_fraction,
            seeds,
            first_seed,
            iterations,
            lr,
            batch_size,
            eval_every,
            depth,
            entangler,
            pool
        )
    }

    /// Resolves against built-in defaults and validates.
    pub fn to_spec(&self) -> Result<ExperimentSpec, CliError> {
        let mut spec = ExperimentSpec::new(
            self.arch.unwrap_or(Architecture::OneLayer),
            self.model.unwrap_or(Model::Qccnn),
            self.labels.unwrap_or(2),
        );
        self.apply(&mut spec);
        spec.validate()?;
        Ok(spec)
    }

    /// Copies the set fields (except model, arch and labels) onto `spec`.
    pub fn apply(&self, spec: &mut ExperimentSpec) {
        if let Some(v) = self.dataset_size {
            spec.dataset_size = v;
        }
        if let Some(v) = self.train_fraction {
            spec.train_fraction = v;
        }
        let first = self.first_seed.unwrap_or(0);
        let count = self.seeds.unwrap_or(10);
        spec.seeds = (first..first.saturating_add(count)).collect();
        if let Some(v) = self.iterations {
            spec.train.iterations = v;
        }
        if let Some(v) = self.lr {
            spec.train.lr = v;
        }
        if self.batch_size.is_some() {
            spec.train.batch_size = self.batch_size;
        }
        if let Some(v) = self.eval_every {
            spec.train.eval_every = v;
        }
        if let Some(v) = self.depth {
            spec.depth = v;
        }
        if let Some(v) = self.entangler {
            spec.entangler = v;
        }
        if let Some(v) = self.pool {
            spec.pool = v;
        }
    }
}

/// Merges defaults, an optional config file and the command-line flags.
pub fn resolve(file: Option<&Path>, flags: &ExperimentArgs) -> Result<ExperimentArgs, CliError> {
    let base = match file {
        Some(p) => ExperimentArgs::load(p)?,
        None => ExperimentArgs::default(),
    };
    Ok(base.overridden_by(flags))
}
