use clap::ValueEnum;

use ppcl::learner::{gradient_check, Architecture, ConvSpec, ModelSpec};
use ppcl::privacy::{verify_property1, verify_property2, Estimator};
use ppcl::randmat::{condition_histogram, summarize_conditions, ConditionSummary, MatrixKind};

use crate::Failure;

pub const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Property1,
    Property2,
    Gradcheck,
    Condition,
}

pub const PROPERTY2_X: [f64; 10] = [0.3, -1.2, 0.8, 2.0, -0.5, 1.5, -0.9, 0.1, 1.1, -1.7];

pub fn verify(suite: Suite, seed: u64) -> Result<(), Failure> {
    let pass = match suite {
        Suite::Property1 => property1(seed)?,
        Suite::Property2 => property2(seed)?,
        Suite::Gradcheck => gradcheck(seed)?,
        Suite::Condition => condition(seed)?,
    };
    if pass {
        println!("PASS");
        Ok(())
    } else {
        println!("FAIL");
        Err(Failure::verification("bound violated"))
    }
}

fn property1(seed: u64) -> Result<bool, Failure> {
    let (bias_tol, slack) = (0.01, 0.10);
    let r = verify_property1(30, 20, 8, 100_000, seed)?;
    println!("d=30 k=20 pairs={} matrices={}", r.n_pairs, r.n_matrices);
    println!("max |bias dot|   {:.5}  bound {bias_tol}", r.max_abs_bias_dot);
    println!("max |bias dist|  {:.5}", r.max_abs_bias_dist);
    println!("max var dot      {:.5}  bound {:.5}", r.max_var_dot, r.bound_var_dot * (1.0 + slack));
    println!("max var dist     {:.5}  bound {:.5}", r.max_var_dist, r.bound_var_dist * (1.0 + slack));
    Ok(r.passes(bias_tol, slack))
}

fn property2(seed: u64) -> Result<bool, Failure> {
    let tol = 0.05;
    let adjoint = verify_property2(&PROPERTY2_X, 8, 100_000, seed, Estimator::Adjoint)?;
    let min_norm = verify_property2(&PROPERTY2_X, 8, 100_000, seed, Estimator::MinNorm)?;
    println!("d=10 k=8 matrices={}", adjoint.trials);
    println!("i  predicted  adjoint  min_norm");
    for i in 0..PROPERTY2_X.len() {
        println!(
            "{i}  {:.4}  {:.4}  {:.4}",
            adjoint.per_element_predicted_var[i], adjoint.per_element_empirical_var[i], min_norm.per_element_empirical_var[i]
        );
    }
    println!("adjoint max variance deviation  {:.4}  bound {tol}", adjoint.max_variance_deviation());
    println!("adjoint max |bias| / 4 sigma    {:.4}  bound 1", adjoint.max_bias_in_bands());
    println!("min-norm max variance deviation {:.4}  (not checked)", min_norm.max_variance_deviation());
    Ok(adjoint.max_variance_deviation() <= tol && adjoint.bias_within_band())
}

/// A dense net and a net with two convolution blocks.
pub fn gradcheck_specs() -> Vec<(&'static str, ModelSpec)> {
    let conv = |out_channels| ConvSpec { out_channels, kernel_h: 3, kernel_w: 3, zero_pad: true };
    let cnn = ModelSpec {
        architecture: Architecture::Cnn {
            conv_layers: vec![conv(3), conv(4)],
            pool_after: vec![true, false],
            dense_sizes: vec![6, 3],
            dropout_rates: vec![],
        },
        input_shape: (1, 6, 6),
        n_classes: 3,
    };
    vec![("mlp", ModelSpec::mlp(5, &[7, 6], 3)), ("cnn", cnn)]
}

fn gradcheck(seed: u64) -> Result<bool, Failure> {
    let bound = 1e-4;
    let mut pass = true;
    for (name, spec) in gradcheck_specs() {
        let err = gradient_check(&spec, seed)?;
        println!("{name}  max relative error {err:.3e}  bound {bound:e}");
        pass &= err < bound;
    }
    Ok(pass)
}

fn condition(seed: u64) -> Result<bool, Failure> {
    let draws = 1000;
    let summarize = |kind| -> Result<ConditionSummary, Failure> { Ok(summarize_conditions(&condition_histogram(kind, 28, 28, draws, seed)?)) };
    let gaussian = summarize(MatrixKind::gaussian())?;
    let rademacher = summarize(MatrixKind::Rademacher)?;
    let binary = summarize(MatrixKind::Binary { ones: 3 })?;
    println!("28x28, {draws} draws each");
    println!("kind        median     max        singular  >1e4    [1e4,1e5]");
    for (name, s) in [("gaussian", &gaussian), ("rademacher", &rademacher), ("binary", &binary)] {
        println!(
            "{name:<10}  {:<9.3e}  {:<9.3e}  {:<8}  {:.4}  {:.4}",
            s.median, s.max, s.singular, s.frac_above_1e4, s.frac_1e4_to_1e5
        );
    }
    println!("gaussian fraction above 1e4 {:.4}  bound 0.02", gaussian.frac_above_1e4);
    println!("binary max above gaussian max: {}", binary.max > gaussian.max);
    Ok(gaussian.frac_above_1e4 < 0.02 && binary.max > gaussian.max)
}
