//! The four subcommands. Each returns the text it wants printed so the
//! binary stays a thin dispatcher.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use qconv_core::gradcheck::{run_gradcheck, GradcheckConfig, GradcheckReport};
use qconv_core::pqc::ShiftRule;
use qconv_core::tetris::{enumerate_configurations, filter_labels, generate_dataset, save_dataset};
use qconv_core::train::{run_experiment, Architecture, ExperimentResult, ExperimentSpec, Model};
use qconv_core::BrickClass;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{resolve, ExperimentArgs};
use crate::output::{fmt_float, metrics_table, write_csv, write_json};
use crate::{io_error, CliError};

#[derive(Debug, Clone, Args)]
pub struct GenDataArgs {
    /// Number of images to generate
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// RNG seed (PCG64, rand `seed_from_u64`)
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated classes to keep, relabelled in the given order, e.g. S,T [default: all five]
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    /// Output JSON-lines file
    #[arg(long, default_value = "tetris.jsonl")]
    pub out: PathBuf,
}

pub fn gen_data(args: &GenDataArgs) -> Result<String, CliError> {
    if args.n == 0 {
        return Err(CliError::Config(
            "config error in `n`: must be at least 1".into(),
        ));
    }
    let mut dataset = generate_dataset(args.n, args.seed)?;
    if let Some(labels) = &args.labels {
        for name in labels {
            BrickClass::from_name(name)
                .map_err(|e| CliError::Config(format!("config error in `labels`: {e}")))?;
        }
        dataset = filter_labels(&dataset, labels)
            .map_err(|e| CliError::Config(format!("config error in `labels`: {e}")))?;
    }
    save_dataset(&dataset, &args.out)?;
    let counts = dataset.class_counts();
    let mut report = format!("wrote {} images to {}\n", dataset.len(), args.out.display());
    for (name, count) in dataset.class_names.iter().zip(counts) {
        let class = BrickClass::from_name(name)?;
        let configs = enumerate_configurations(class).len();
        writeln!(report, "{name}: {configs} configurations, {count} images").unwrap();
    }
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Flat TOML file with any of the experiment keys; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Directory for the metrics CSV and summary JSON
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedFinal {
    pub seed: u64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Serialize)]
struct TrainSummary<'a> {
    final_iteration: usize,
    final_mean_train_loss: f64,
    final_mean_test_loss: f64,
    final_mean_test_accuracy: f64,
    per_seed: Vec<SeedFinal>,
    wall_time_seconds: f64,
    config: &'a ExperimentSpec,
}

fn run_name(spec: &ExperimentSpec) -> String {
    format!("{}_{}_{}label", spec.model, spec.arch, spec.labels)
}

fn seed_finals(result: &ExperimentResult) -> Vec<SeedFinal> {
    result
        .runs
        .iter()
        .map(|r| {
            let last = r.records.last().expect("runs record at least once");
            SeedFinal {
                seed: r.seed,
                train_loss: last.train_loss,
                test_loss: last.test_loss,
                test_accuracy: last.test_accuracy,
            }
        })
        .collect()
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

pub fn train(args: &TrainArgs) -> Result<String, CliError> {
    let spec = resolve(args.config.as_deref(), &args.experiment)?.to_spec()?;
    ensure_dir(&args.out_dir)?;
    let start = Instant::now();
    let result = run_experiment(&spec)?;
    let wall = start.elapsed().as_secs_f64();

    let name = run_name(&spec);
    let csv_path = args.out_dir.join(format!("{name}_metrics.csv"));
    let (header, rows) = metrics_table(&result);
    write_csv(&csv_path, &header, &rows)?;

    let last = result.final_mean();
    let summary = TrainSummary {
        final_iteration: last.iteration,
        final_mean_train_loss: last.train_loss,
        final_mean_test_loss: last.test_loss,
        final_mean_test_accuracy: last.test_accuracy,
        per_seed: seed_finals(&result),
        wall_time_seconds: wall,
        config: &spec,
    };
    let json_path = args.out_dir.join(format!("{name}_summary.json"));
    write_json(&json_path, &summary)?;
    Ok(format!(
        "{name}: {} seeds, iteration {}: test accuracy {}, train loss {}, test loss {} ({wall:.1} s)\nwrote {} and {}\n",
        spec.seeds.len(),
        last.iteration,
        fmt_float(last.test_accuracy),
        fmt_float(last.train_loss),
        fmt_float(last.test_loss),
        csv_path.display(),
        json_path.display(),
    ))
}

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    /// Number of random circuits (N in {2, 4})
    #[arg(long, default_value_t = 200)]
    pub instances: usize,
    /// Fix the circuit depth instead of sampling it from 1..=4
    #[arg(long)]
    pub depth: Option<usize>,
    /// RNG seed for circuits, parameters and windows
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Finite-difference step
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
    /// Largest accepted absolute deviation
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    /// Test mode: use the rule ½[f(θ+s) − f(θ−s)] with the given shift (π/2 if no value), which must fail
    #[arg(long, num_args = 0..=1, default_missing_value = "1.5707963267948966")]
    pub fault_shift: Option<f64>,
}

pub fn gradcheck_config(args: &GradcheckArgs) -> Result<GradcheckConfig, CliError> {
    if args.instances == 0 {
        return Err(CliError::Config(
            "config error in `instances`: must be at least 1".into(),
        ));
    }
    if !(args.step > 0.0 && args.tolerance > 0.0) {
        return Err(CliError::Config(
            "step and tolerance must be positive".into(),
        ));
    }
    let rule = match args.fault_shift {
        Some(shift) => ShiftRule { shift, scale: 0.5 },
        None => ShiftRule::EXACT,
    };
    let defaults = GradcheckConfig::default();
    Ok(GradcheckConfig {
        instances: args.instances,
        depths: args.depth.map_or(defaults.depths.clone(), |d| vec![d]),
        step: args.step,
        tolerance: args.tolerance,
        seed: args.seed,
        rule,
        ..defaults
    })
}

/// Returns the report; the caller fails the process when it did not pass.
pub fn gradcheck(args: &GradcheckArgs) -> Result<(GradcheckReport, String), CliError> {
    let report = run_gradcheck(&gradcheck_config(args)?)?;
    let mut text = format!(
        "checked {} gradient components over {} circuits\nmax deviation {} (tolerance {})\n",
        report.components,
        report.instances,
        fmt_float(report.max_deviation),
        fmt_float(report.tolerance)
    );
    if report.passed() {
        text.push_str("PASS\n");
    } else {
        let worst = report
            .worst
            .as_ref()
            .expect("a failing run has a worst instance");
        writeln!(
            text,
            "FAIL\nworst instance: {}",
            serde_json::to_string(worst).expect("instances serialise")
        )
        .unwrap();
    }
    Ok((report, text))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Panel {
    /// 2-label test accuracy
    A,
    /// 5-label test accuracy
    B,
    /// 2-label training loss
    C,
    /// 5-label training loss
    D,
}

impl Panel {
    pub const ALL: [Panel; 4] = [Panel::A, Panel::B, Panel::C, Panel::D];

    pub fn labels(self) -> usize {
        match self {
            Panel::A | Panel::C => 2,
            Panel::B | Panel::D => 5,
        }
    }

    pub fn is_accuracy(self) -> bool {
        matches!(self, Panel::A | Panel::B)
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Panel::A => "panel_a.csv",
            Panel::B => "panel_b.csv",
            Panel::C => "panel_c.csv",
            Panel::D => "panel_d.csv",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReproArgs {
    /// Only produce this panel [default: all four]
    #[arg(long, value_enum)]
    pub panel: Option<Panel>,
    /// Flat TOML file; model, arch and labels are ignored since repro runs every combination
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Directory for the panel CSVs and summary.json
    #[arg(long, default_value = "repro")]
    pub out_dir: PathBuf,
}

/// Column order inside every panel CSV.
pub const COMBINATIONS: [(Model, Architecture); 4] = [
    (Model::Cnn, Architecture::OneLayer),
    (Model::Cnn, Architecture::TwoLayer),
    (Model::Qccnn, Architecture::OneLayer),
    (Model::Qccnn, Architecture::TwoLayer),
];

pub const FULL_SEEDS: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentFinal {
    pub model: Model,
    pub arch: Architecture,
    pub labels: usize,
    pub final_mean_test_accuracy: f64,
    pub final_mean_train_loss: f64,
    pub final_mean_test_loss: f64,
    pub per_seed: Vec<SeedFinal>,
}

/// QCCNN against the classical baseline at matched architecture and labels.
#[derive(Debug, Clone, Serialize)]
pub struct LossComparison {
    pub labels: usize,
    pub arch: Architecture,
    pub qccnn_train_loss: f64,
    pub cnn_train_loss: f64,
    pub qccnn_lower: bool,
    /// Seeds whose own final loss does not show the QCCNN advantage.
    pub discrepant_seeds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproSummary {
    pub panels: Vec<Panel>,
    pub seeds: Vec<u64>,
    pub reduced_seeds: bool,
    pub note: Option<String>,
    pub iterations: usize,
    pub experiments: Vec<ExperimentFinal>,
    pub loss_comparisons: Vec<LossComparison>,
    pub wall_time_seconds: f64,
}

#[derive(Debug)]
pub struct ReproOutcome {
    pub files: Vec<PathBuf>,
    pub summary: ReproSummary,
    pub results: Vec<ExperimentResult>,
}

fn column(model: Model, arch: Architecture) -> String {
    format!("{model}_{arch}").replace('-', "_")
}

fn loss_comparison(
    labels: usize,
    arch: Architecture,
    cnn: &ExperimentResult,
    q: &ExperimentResult,
) -> LossComparison {
    let discrepant_seeds = q
        .runs
        .iter()
        .zip(&cnn.runs)
        .filter(|(a, b)| {
            a.records.last().unwrap().train_loss >= b.records.last().unwrap().train_loss
        })
        .map(|(a, _)| a.seed)
        .collect();
    let qccnn_train_loss = q.final_mean().train_loss;
    let cnn_train_loss = cnn.final_mean().train_loss;
    LossComparison {
        labels,
        arch,
        qccnn_train_loss,
        cnn_train_loss,
        qccnn_lower: qccnn_train_loss < cnn_train_loss,
        discrepant_seeds,
    }
}

/// Runs the experiments behind `panels` and writes one CSV per panel plus
/// `summary.json` into `out_dir`.
pub fn run_repro(
    base: &ExperimentArgs,
    panels: &[Panel],
    out_dir: &Path,
) -> Result<ReproOutcome, CliError> {
    let mut panels = panels.to_vec();
    panels.sort();
    panels.dedup();
    let mut label_sets: Vec<usize> = panels.iter().map(|p| p.labels()).collect();
    label_sets.sort();
    label_sets.dedup();

    let mut specs = Vec::new();
    for &labels in &label_sets {
        for (model, arch) in COMBINATIONS {
            let mut spec = ExperimentSpec::new(arch, model, labels);
            base.apply(&mut spec);
            spec.validate()?;
            specs.push(spec);
        }
    }
    ensure_dir(out_dir)?;

    let start = Instant::now();
    let results = specs
        .par_iter()
        .map(run_experiment)
        .collect::<qconv_core::Result<Vec<_>>>()?;
    let wall = start.elapsed().as_secs_f64();

    let find = |labels, model, arch| {
        results
            .iter()
            .find(|r| r.spec.labels == labels && r.spec.model == model && r.spec.arch == arch)
            .expect("every combination ran")
    };

    let mut files = Vec::new();
    for &panel in &panels {
        let cols: Vec<&ExperimentResult> = COMBINATIONS
            .iter()
            .map(|&(m, a)| find(panel.labels(), m, a))
            .collect();
        let mut header = vec!["iteration".to_string()];
        header.extend(COMBINATIONS.iter().map(|&(m, a)| column(m, a)));
        let rows = (0..cols[0].mean.len())
            .map(|i| {
                let mut row = vec![cols[0].mean[i].iteration.to_string()];
                row.extend(cols.iter().map(|r| {
                    let rec = &r.mean[i];
                    fmt_float(if panel.is_accuracy() {
                        rec.test_accuracy
                    } else {
                        rec.train_loss
                    })
                }));
                row
            })
            .collect::<Vec<_>>();
        let path = out_dir.join(panel.file_name());
        write_csv(&path, &header, &rows)?;
        files.push(path);
    }

    let experiments = results
        .iter()
        .map(|r| {
            let last = r.final_mean();
            ExperimentFinal {
                model: r.spec.model,
                arch: r.spec.arch,
                labels: r.spec.labels,
                final_mean_test_accuracy: last.test_accuracy,
                final_mean_train_loss: last.train_loss,
                final_mean_test_loss: last.test_loss,
                per_seed: seed_finals(r),
            }
        })
        .collect();
    let mut loss_comparisons = Vec::new();
    for &labels in &label_sets {
        for arch in [Architecture::OneLayer, Architecture::TwoLayer] {
            loss_comparisons.push(loss_comparison(
                labels,
                arch,
                find(labels, Model::Cnn, arch),
                find(labels, Model::Qccnn, arch),
            ));
        }
    }
    let seeds = specs[0].seeds.clone();
    let reduced_seeds = seeds.len() < FULL_SEEDS;
    let summary = ReproSummary {
        panels,
        reduced_seeds,
        note: reduced_seeds.then(|| {
            format!(
                "reduced-seed run: {} of {FULL_SEEDS} seeds, curves are noisier than the reference protocol",
                seeds.len()
            )
        }),
        seeds,
        iterations: specs[0].train.iterations,
        experiments,
        loss_comparisons,
        wall_time_seconds: wall,
    };
    let summary_path = out_dir.join("summary.json");
    write_json(&summary_path, &summary)?;
    files.push(summary_path);
    Ok(ReproOutcome {
        files,
        summary,
        results,
    })
}

pub fn repro(args: &ReproArgs) -> Result<String, CliError> {
    let base = resolve(args.config.as_deref(), &args.experiment)?;
    let panels = args.panel.map_or(Panel::ALL.to_vec(), |p| vec![p]);
    let outcome = run_repro(&base, &panels, &args.out_dir)?;
    let s = &outcome.summary;
    let mut text = String::new();
    if let Some(note) = &s.note {
        writeln!(text, "note: {note}").unwrap();
    }
    for e in &s.experiments {
        writeln!(
            text,
            "{}-label {} {}: test accuracy {:.4}, train loss {:.4}",
            e.labels, e.model, e.arch, e.final_mean_test_accuracy, e.final_mean_train_loss
        )
        .unwrap();
    }
    for c in &s.loss_comparisons {
        let verdict = if c.qccnn_lower { "lower" } else { "NOT lower" };
        writeln!(
            text,
            "{}-label {}: qccnn loss {:.4} {verdict} than cnn {:.4}",
            c.labels, c.arch, c.qccnn_train_loss, c.cnn_train_loss
        )
        .unwrap();
        if !c.discrepant_seeds.is_empty() {
            writeln!(
                text,
                "  reproduction discrepancy on seeds {:?}",
                c.discrepant_seeds
            )
            .unwrap();
        }
    }
    for f in &outcome.files {
        writeln!(text, "wrote {}", f.display()).unwrap();
    }
    Ok(text)
}
