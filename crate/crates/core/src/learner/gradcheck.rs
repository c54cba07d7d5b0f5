use crate::error::Result;
use crate::rng::{derive_seed, Prng};

use super::{DropoutMode, Model, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub batch: usize,
    pub step: f64,
    pub lambda: f64,
    /// Evaluate with a fixed dropout mask drawn from this seed.
    pub dropout_seed: Option<u64>,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { batch: 2, step: 1e-5, lambda: 1e-2, dropout_seed: None }
    }
}

/// Max over parameters of `|g − g_fd| / max(|g|, |g_fd|, 1e-8)` for a random
/// model and batch, `g_fd` being the central difference with step 1e-5.
pub fn gradient_check(spec: &ModelSpec, seed: u64) -> Result<f64> {
    gradient_check_with(spec, seed, GradCheckOptions::default())
}

pub fn gradient_check_with(spec: &ModelSpec, seed: u64, opts: GradCheckOptions) -> Result<f64> {
    let mut model = Model::<f64>::new(spec.clone(), derive_seed(seed, 0))?;
    let mut rng = Prng::new(derive_seed(seed, 1));
    // Non-zero biases, so every parameter also feels the penalty term.
    for p in model.params_mut() {
        if *p == 0.0 {
            *p = 0.2 * (rng.uniform() - 0.5);
        }
    }
    let x: Vec<f64> = (0..opts.batch * spec.input_dim()).map(|_| rng.gaussian()).collect();
    let y: Vec<usize> = (0..opts.batch).map(|_| rng.below(spec.n_classes)).collect();
    let mode = opts.dropout_seed.map_or(DropoutMode::Off, DropoutMode::Seeded);
    let (_, grad) = model.loss_and_grad(&x, &y, opts.lambda, mode)?;
    let mut worst: f64 = 0.0;
    for i in 0..model.param_count() {
        let orig = model.params()[i];
        model.params_mut()[i] = orig + opts.step;
        let up = model.loss(&x, &y, opts.lambda, mode)?;
        model.params_mut()[i] = orig - opts.step;
        let down = model.loss(&x, &y, opts.lambda, mode)?;
        model.params_mut()[i] = orig;
        let fd = (up - down) / (2.0 * opts.step);
        let err = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}
