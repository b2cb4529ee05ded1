//! CSV and JSON writers. Floats use 17 significant digits so values
//! round-trip exactly.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use qconv_core::train::{ExperimentResult, MetricsRecord};
use serde::Serialize;

use crate::{io_error, CliError};

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(header).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut f = File::create(path).map_err(|e| io_error(path, e))?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| io_error(path, e))?;
    writeln!(f).map_err(|e| io_error(path, e))
}

const METRICS: [&str; 3] = ["train_loss", "test_loss", "test_accuracy"];

fn metric_values(r: &MetricsRecord) -> [f64; 3] {
    [r.train_loss, r.test_loss, r.test_accuracy]
}

/// Header: iteration, the three seed-mean metrics, then the same three for
/// each seed as `seed<N>_<metric>`.
pub fn metrics_table(result: &ExperimentResult) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["iteration".to_string()];
    header.extend(METRICS.iter().map(|m| m.to_string()));
    for run in &result.runs {
        header.extend(METRICS.iter().map(|m| format!("seed{}_{m}", run.seed)));
    }
    let rows = result
        .mean
        .iter()
        .enumerate()
        .map(|(i, mean)| {
            let mut row = vec![mean.iteration.to_string()];
            row.extend(metric_values(mean).into_iter().map(fmt_float));
            for run in &result.runs {
                row.extend(metric_values(&run.records[i]).into_iter().map(fmt_float));
            }
            row
        })
        .collect();
    (header, rows)
}
