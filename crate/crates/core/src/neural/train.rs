use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::mlp::MlpParams;
use super::NeuralError;

/// A differentiable regressor with flat parameters.
pub trait Model: Clone {
    fn n_inputs(&self) -> usize;
    fn n_outputs(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn predict_row(&self, x: &[f64]) -> Vec<f64>;
    /// Adds the gradient of `sum_k (y_hat_k - y_k)^2` into `grad` and
    /// returns that squared error.
    fn accumulate_sq_error_grad(&self, x: &[f64], y: &[f64], grad: &mut [f64]) -> f64;
}

impl Model for MlpParams {
    fn n_inputs(&self) -> usize {
        self.spec().n_inputs()
    }

    fn n_outputs(&self) -> usize {
        self.spec().n_outputs()
    }

    fn params(&self) -> &[f64] {
        self.flat()
    }

    fn params_mut(&mut self) -> &mut [f64] {
        self.flat_mut()
    }

    fn predict_row(&self, x: &[f64]) -> Vec<f64> {
        self.predict(x).expect("row width checked by trainer")
    }

    fn accumulate_sq_error_grad(&self, x: &[f64], y: &[f64], grad: &mut [f64]) -> f64 {
        let (out, cache) = self.forward(x).expect("row width checked by trainer");
        let d: Vec<f64> = out.iter().zip(y).map(|(o, t)| 2.0 * (o - t)).collect();
        self.backward_into(&cache, &d, grad).expect("shapes match");
        out.iter().zip(y).map(|(o, t)| (o - t) * (o - t)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            batch_size: 2048,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(NeuralError::Config(
                "epochs and batch size must be positive".into(),
            ));
        }
        if !(self.adam.lr > 0.0 && self.adam.lr.is_finite()) {
            return Err(NeuralError::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Row-major samples with a fixed width.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub n_inputs: usize,
    pub n_outputs: usize,
}

impl<'a> Samples<'a> {
    pub fn new(
        x: &'a [f64],
        y: &'a [f64],
        n_inputs: usize,
        n_outputs: usize,
    ) -> Result<Self, NeuralError> {
        if n_inputs == 0 || n_outputs == 0 || !x.len().is_multiple_of(n_inputs) {
            return Err(NeuralError::Shape {
                expected: n_inputs,
                found: x.len(),
            });
        }
        let n = x.len() / n_inputs;
        if y.len() != n * n_outputs {
            return Err(NeuralError::Shape {
                expected: n * n_outputs,
                found: y.len(),
            });
        }
        Ok(Samples {
            x,
            y,
            n_inputs,
            n_outputs,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len() / self.n_inputs
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x_row(&self, i: usize) -> &'a [f64] {
        &self.x[i * self.n_inputs..(i + 1) * self.n_inputs]
    }

    pub fn y_row(&self, i: usize) -> &'a [f64] {
        &self.y[i * self.n_outputs..(i + 1) * self.n_outputs]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub valid_rmse: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    pub best: M,
    pub best_epoch: usize,
    pub best_valid_rmse: f64,
    pub history: Vec<EpochRecord>,
}

/// RMSE of `model` over the given rows (all outputs pooled).
pub fn rmse_on<M: Model>(model: &M, data: &Samples, rows: &[usize]) -> f64 {
    let mut s = 0.0;
    for &r in rows {
        let out = model.predict_row(data.x_row(r));
        for (o, t) in out.iter().zip(data.y_row(r)) {
            s += (o - t) * (o - t);
        }
    }
    (s / (rows.len() * data.n_outputs) as f64).sqrt()
}

/// Minibatch Adam on the mean squared error with a per-epoch seeded
/// shuffle. Returns the parameters with the lowest validation RMSE (the
/// earliest epoch on ties).
pub fn train<M: Model>(
    model: M,
    data: &Samples,
    train_rows: &[usize],
    valid_rows: &[usize],
    cfg: &TrainConfig,
) -> Result<TrainOutcome<M>, NeuralError> {
    cfg.validate()?;
    if train_rows.is_empty() || valid_rows.is_empty() {
        return Err(NeuralError::EmptySplit);
    }
    if data.n_inputs != model.n_inputs() || data.n_outputs != model.n_outputs() {
        return Err(NeuralError::Shape {
            expected: model.n_inputs(),
            found: data.n_inputs,
        });
    }
    if let Some(&r) = train_rows
        .iter()
        .chain(valid_rows)
        .find(|&&r| r >= data.len())
    {
        return Err(NeuralError::Shape {
            expected: data.len(),
            found: r + 1,
        });
    }

    let mut model = model;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = AdamState::new(model.params().len());
    let mut order = train_rows.to_vec();
    let mut grad = vec![0.0; model.params().len()];
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(M, usize, f64)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut sq_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &r in batch {
                sq_sum += model.accumulate_sq_error_grad(data.x_row(r), data.y_row(r), &mut grad);
            }
            let scale = 1.0 / (batch.len() * data.n_outputs) as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam_step(model.params_mut(), &grad, &mut state, &cfg.adam);
        }
        let train_mse = sq_sum / (order.len() * data.n_outputs) as f64;
        if !train_mse.is_finite() || model.params().iter().any(|p| !p.is_finite()) {
            return Err(NeuralError::NonFinite { epoch, train_mse });
        }
        let valid_rmse = rmse_on(&model, data, valid_rows);
        if !valid_rmse.is_finite() {
            return Err(NeuralError::NonFinite {
                epoch,
                train_mse: valid_rmse,
            });
        }
        history.push(EpochRecord {
            epoch,
            train_mse,
            valid_rmse,
        });
        if best.as_ref().is_none_or(|b| valid_rmse < b.2) {
            best = Some((model.clone(), epoch, valid_rmse));
        }
        log::trace!("epoch {epoch}: train mse {train_mse:.6e}, valid rmse {valid_rmse:.6e}");
    }
    let (best, best_epoch, best_valid_rmse) = best.expect("epochs >= 1");
    Ok(TrainOutcome {
        best,
        best_epoch,
        best_valid_rmse,
        history,
    })
}
