pub mod adam;
pub mod experiment;
pub mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use experiment::{
    label_names, mean_records, network_spec, network_spec_with, run_experiment, run_seed,
    Architecture, ExperimentResult, ExperimentSpec, Model, SeedRun,
};
pub use trainer::{
    batch_gradient, evaluate, evaluate_counts, train, Evaluation, MetricsRecord, TrainConfig,
};
