//! Randomised comparison of shift-rule gradients against central finite
//! differences of the statevector feature.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::Serialize;

use crate::error::Result;
use crate::pqc::{
    build_circuit, input_grad_with, param_shift_grad_with, quantum_feature, ParamVector, ShiftRule,
    WindowValues,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckConfig {
    pub instances: usize,
    pub qubits: Vec<usize>,
    /// Depths sampled uniformly from this list.
    pub depths: Vec<usize>,
    pub step: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub rule: ShiftRule,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            instances: 200,
            qubits: vec![2, 4],
            depths: vec![1, 2, 3, 4],
            step: 1e-5,
            tolerance: 1e-6,
            seed: 0,
            rule: ShiftRule::EXACT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub n_qubits: usize,
    pub depth: usize,
    pub params: Vec<f64>,
    pub window: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub instances: usize,
    pub components: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub worst: Option<Instance>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

fn central_difference(f: impl Fn(f64) -> Result<f64>, x: f64, h: f64) -> Result<f64> {
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

pub fn run_gradcheck(config: &GradcheckConfig) -> Result<GradcheckReport> {
    let mut rng = Pcg64::seed_from_u64(config.seed);
    let mut report = GradcheckReport {
        instances: config.instances,
        components: 0,
        max_deviation: 0.0,
        tolerance: config.tolerance,
        worst: None,
    };
    for _ in 0..config.instances {
        let n = config.qubits[rng.gen_range(0..config.qubits.len())];
        let depth = config.depths[rng.gen_range(0..config.depths.len())];
        let spec = build_circuit(n, depth)?;
        let params: Vec<f64> = (0..spec.param_count())
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        let window: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let pv = ParamVector::new(params.clone())?;
        let wv = WindowValues::new(window.clone())?;

        let mut deviations = Vec::new();
        for (j, g) in param_shift_grad_with(&spec, &pv, &wv, config.rule)?
            .into_iter()
            .enumerate()
        {
            let fd = central_difference(
                |x| {
                    let mut p = params.clone();
                    p[j] = x;
                    quantum_feature(&spec, &ParamVector::new(p)?, &wv)
                },
                params[j],
                config.step,
            )?;
            deviations.push((g - fd).abs());
        }
        for (j, g) in input_grad_with(&spec, &pv, &wv, config.rule)?
            .into_iter()
            .enumerate()
        {
            let fd = central_difference(
                |x| {
                    let mut w = window.clone();
                    w[j] = x;
                    quantum_feature(&spec, &pv, &WindowValues::new(w)?)
                },
                window[j],
                config.step,
            )?;
            deviations.push((g - fd).abs());
        }
        report.components += deviations.len();
        let worst_here = deviations.into_iter().fold(0.0, f64::max);
        if worst_here > report.max_deviation || report.worst.is_none() {
            report.max_deviation = report.max_deviation.max(worst_here);
            report.worst = Some(Instance {
                n_qubits: n,
                depth,
                params,
                window,
            });
        }
    }
    Ok(report)
}
