use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{argmax, mse_loss, one_hot, Gradients, Network};
use crate::tetris::Dataset;
use crate::train::adam::{AdamConfig, AdamState};

/// Samples per work unit. Chunk boundaries are fixed so gradient sums are
/// reduced in the same order whatever the thread count.
const CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub lr: f64,
    /// `None` trains on the full batch every iteration.
    pub batch_size: Option<usize>,
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            lr: 0.01,
            batch_size: None,
            eval_every: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations", "must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", "must be positive and finite"));
        }
        if self.eval_every == 0 {
            return Err(Error::config("eval_every", "must be at least 1"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iteration: usize,
    /// Mean batch loss at the parameters the iteration started from.
    pub train_loss: f64,
    /// Test metrics after the iteration's update.
    pub test_loss: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub correct: usize,
    pub total: usize,
    pub mean_loss: f64,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

pub fn evaluate_counts(net: &Network, dataset: &Dataset) -> Result<Evaluation> {
    if dataset.is_empty() {
        return Err(Error::domain("cannot evaluate on an empty dataset"));
    }
    let n_classes = net.n_classes();
    let partials = dataset
        .samples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut correct = 0;
            let mut loss = 0.0;
            for s in chunk {
                let pred = net.predict(&s.image())?;
                if argmax(&pred) == s.label {
                    correct += 1;
                }
                loss += mse_loss(&pred, &one_hot(s.label, n_classes))?.0;
            }
            Ok((correct, loss))
        })
        .collect::<Result<Vec<_>>>()?;
    let (correct, loss) = partials
        .into_iter()
        .fold((0, 0.0), |(c, l), (pc, pl)| (c + pc, l + pl));
    Ok(Evaluation {
        correct,
        total: dataset.len(),
        mean_loss: loss / dataset.len() as f64,
    })
}

/// `(accuracy, mean MSE)`; argmax ties go to the lowest class index.
pub fn evaluate(net: &Network, dataset: &Dataset) -> Result<(f64, f64)> {
    let e = evaluate_counts(net, dataset)?;
    Ok((e.accuracy(), e.mean_loss))
}

/// Mean loss over `indices` and its gradient in flat parameter order.
pub fn batch_gradient(
    net: &Network,
    dataset: &Dataset,
    indices: &[usize],
) -> Result<(f64, Vec<f64>)> {
    let n_classes = net.n_classes();
    let scale = 1.0 / indices.len() as f64;
    let partials = indices
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut grads = net.new_gradients();
            let mut loss = 0.0;
            for &i in chunk {
                let s = &dataset.samples[i];
                let (pred, trace) = net.forward(&s.image())?;
                let (l, g) = mse_loss(&pred, &one_hot(s.label, n_classes))?;
                loss += l;
                let g: Vec<f64> = g.into_iter().map(|x| x * scale).collect();
                net.backward(&trace, &g, &mut grads)?;
            }
            Ok((loss, grads))
        })
        .collect::<Result<Vec<(f64, Gradients)>>>()?;
    let mut iter = partials.into_iter();
    let (mut loss, mut grads) = iter.next().ok_or_else(|| Error::domain("empty batch"))?;
    for (l, g) in iter {
        loss += l;
        grads.merge(&g);
    }
    Ok((loss * scale, net.gradients_flat(&grads)?))
}

/// Trains `net` in place with ADAM, recording metrics every `eval_every`
/// iterations and after the last one.
pub fn train(
    net: &mut Network,
    train_set: &Dataset,
    test_set: &Dataset,
    config: &TrainConfig,
    seed: u64,
) -> Result<Vec<MetricsRecord>> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::domain("training set is empty"));
    }
    let mut adam = AdamState::new(
        net.param_count(),
        AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        },
    );
    let mut params = net.params_flat();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut shuffle_rng = Pcg64::seed_from_u64(seed);
    let mut cursor = 0;
    let mut records = Vec::with_capacity(config.iterations / config.eval_every + 1);
    for iteration in 1..=config.iterations {
        let batch: &[usize] = match config.batch_size {
            None => &order,
            Some(b) => {
                if cursor == 0 || cursor + b.min(order.len()) > order.len() {
                    order.shuffle(&mut shuffle_rng);
                    cursor = 0;
                }
                let b = b.min(order.len());
                cursor += b;
                &order[cursor - b..cursor]
            }
        };
        let (loss, grads) = batch_gradient(net, train_set, batch)?;
        if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence {
                iteration,
                message: format!("training loss became {loss}"),
            });
        }
        adam.step(&mut params, &grads)?;
        net.set_params_flat(&params)?;
        if iteration % config.eval_every == 0 || iteration == config.iterations {
            let eval = evaluate_counts(net, test_set)?;
            if !eval.mean_loss.is_finite() {
                return Err(Error::Divergence {
                    iteration,
                    message: format!("test loss became {}", eval.mean_loss),
                });
            }
            records.push(MetricsRecord {
                iteration,
                train_loss: loss,
                test_loss: eval.mean_loss,
                test_accuracy: eval.accuracy(),
            });
        }
    }
    Ok(records)
}
