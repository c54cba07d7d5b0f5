use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Prng};

use super::metrics::predict_dataset;
use super::{DropoutMode, Model, ModelSpec, Real, TrainConfig};

const DROPOUT_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// `NaN` when no validation set was given.
    pub valid_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned (0 = initialisation).
    pub best_epoch: usize,
}

/// Mini-batch SGD `θ ← θ − η g` on reshuffled batches for `config.epochs`
/// epochs. Returns the parameters with the best validation accuracy (ties
/// keep the earlier epoch); with an empty validation set the final
/// parameters are returned.
///
/// Seeds: initialisation uses stream 0 of `config.seed`, the shuffle of
/// epoch `e` stream `e`, and dropout masks one stream per step.
pub fn train<T: Real>(spec: &ModelSpec, train: &Dataset, valid: &Dataset, config: &TrainConfig) -> Result<(Model<T>, History)> {
    if train.is_empty() {
        return Err(Error::config("train_set", "training set is empty"));
    }
    let d = spec.input_dim();
    if train.dim() != d {
        return Err(Error::Dimension { expected: d, got: train.dim() });
    }
    if !valid.is_empty() && valid.dim() != d {
        return Err(Error::Dimension { expected: d, got: valid.dim() });
    }
    config.validate(train.len())?;

    let mut model = Model::<T>::new(spec.clone(), derive_seed(config.seed, 0))?;
    let mut history = History::default();
    if config.epochs == 0 {
        return Ok((model, history));
    }

    let xs: Vec<T> = train.samples().iter().flat_map(|s| s.x.iter().map(|&v| T::lit(v))).collect();
    let ys = train.labels();
    let n = train.len();
    let eta = T::lit(config.learning_rate);
    let mut best: Option<(f64, Vec<T>)> = None;
    let mut order: Vec<usize> = (0..n).collect();
    let mut batch = Vec::with_capacity(config.batch_size * d);
    let mut labels = Vec::with_capacity(config.batch_size);
    let mut step = 0u64;

    for epoch in 1..=config.epochs {
        Prng::new(derive_seed(config.seed, epoch as u64)).shuffle(&mut order);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            labels.clear();
            for &i in chunk {
                batch.extend_from_slice(&xs[i * d..(i + 1) * d]);
                labels.push(ys[i]);
            }
            let dropout = DropoutMode::Seeded(derive_seed(config.seed, DROPOUT_STREAM + step));
            step += 1;
            let (loss, grad) = match model.loss_and_grad(&batch, &labels, config.weight_decay, dropout) {
                Ok(v) => v,
                Err(Error::Numerical(_)) => return Err(Error::Diverged { epoch }),
                Err(e) => return Err(e),
            };
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            loss_sum += loss * chunk.len() as f64;
            for (p, g) in model.params_mut().iter_mut().zip(&grad) {
                *p -= eta * *g;
            }
        }
        let valid_accuracy = if valid.is_empty() {
            f64::NAN
        } else {
            let predicted = match predict_dataset(&model, valid) {
                Ok(p) => p,
                Err(Error::Numerical(_)) => return Err(Error::Diverged { epoch }),
                Err(e) => return Err(e),
            };
            predicted.iter().zip(valid.samples()).filter(|(p, s)| **p == s.y).count() as f64 / valid.len() as f64
        };
        history.epochs.push(EpochRecord { epoch, train_loss: loss_sum / n as f64, valid_accuracy });
        if !valid.is_empty() && best.as_ref().is_none_or(|(acc, _)| valid_accuracy > *acc) {
            best = Some((valid_accuracy, model.params().to_vec()));
            history.best_epoch = epoch;
        }
    }
    match best {
        Some((_, params)) => {
            model.params_mut().copy_from_slice(&params);
        }
        None => history.best_epoch = config.epochs,
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{two_gaussians_2d, Dataset, LabeledSample};

    fn xor() -> Dataset {
        let pts = [([0.0, 0.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1), ([1.0, 1.0], 0)];
        Dataset::new(pts.iter().map(|(x, y)| LabeledSample::new(x.to_vec(), *y)).collect(), 2, 2).unwrap()
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let spec = ModelSpec::mlp(2, &[8], 2);
        let cfg = TrainConfig { learning_rate: 0.1, batch_size: 4, epochs: 0, weight_decay: 0.0, seed: 5 };
        let (m, h) = train::<f64>(&spec, &xor(), &xor(), &cfg).unwrap();
        assert!(h.epochs.is_empty());
        assert_eq!(m, Model::new(spec, derive_seed(5, 0)).unwrap());
    }

    #[test]
    fn learns_xor() {
        let spec = ModelSpec::mlp(2, &[8], 2);
        let cfg = TrainConfig { learning_rate: 0.5, batch_size: 4, epochs: 2000, weight_decay: 0.0, seed: 1 };
        let (m, h) = train::<f64>(&spec, &xor(), &xor(), &cfg).unwrap();
        let acc = super::super::evaluate(&m, &xor()).unwrap().accuracy;
        assert_eq!(acc, 1.0, "best epoch {}", h.best_epoch);
    }

    #[test]
    fn divergence_is_reported() {
        let ds = two_gaussians_2d(50, 3).unwrap();
        let spec = ModelSpec::mlp(2, &[30, 40], 2);
        let cfg = TrainConfig { learning_rate: 1e300, batch_size: 10, epochs: 50, weight_decay: 0.0, seed: 0 };
        assert!(matches!(train::<f64>(&spec, &ds, &ds, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn training_is_deterministic() {
        let ds = two_gaussians_2d(40, 9).unwrap();
        let spec = ModelSpec::mlp(2, &[5], 2).with_dropout(vec![0.3]);
        let cfg = TrainConfig { learning_rate: 0.05, batch_size: 8, epochs: 3, weight_decay: 1e-3, seed: 4 };
        let a = train::<f64>(&spec, &ds, &ds, &cfg).unwrap();
        let b = train::<f64>(&spec, &ds, &ds, &cfg).unwrap();
        assert_eq!(a.0.params(), b.0.params());
        assert_eq!(a.1, b.1);
    }
}
