//! Fixed experiment protocols for the synthetic Gaussian examples and the
//! desk-scale MNIST subset.

use std::path::PathBuf;

use ppcl::data::Scaling;
use ppcl::learner::{Architecture, ModelSpec, TrainConfig};
use ppcl::obfuscate::Variant;
use ppcl::randmat::MatrixKind;
use ppcl::sim::{DataConfig, DataSource, ExperimentConfig, Mode, OverlapConfig, PartitionWeights, Precision};

pub const GRP: Variant = Variant::Projection { kind: MatrixKind::gaussian(), compression_ratio: 1.0 };

/// Images kept per digit; 10 × 863 is the largest balanced subset of the
/// 10k-image file.
pub const MNIST_PER_CLASS: usize = 863;

pub fn mnist_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

/// MLP(30, 40) on 10 000 samples per class, 100 epochs of SGD.
pub fn gaussian_protocol(source: DataSource, scheme: Variant, n_participants: usize, master_seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: "gaussian".into(),
        n_participants,
        partition_weights: PartitionWeights::default(),
        scheme,
        mode: Mode::Collaborative,
        model: Architecture::Mlp { layer_sizes: vec![30, 40, 2], dropout_rates: vec![] },
        train: TrainConfig { learning_rate: 0.01, batch_size: 32, epochs: 100, weight_decay: 0.0, seed: 0 },
        data: DataConfig { source, scaling: Scaling::Raw, test_fraction: 0.2 },
        master_seed,
        precision: Precision::F64,
        validation_fraction: 0.1,
        overlap: OverlapConfig { subsample: 0, ..Default::default() },
    }
}

pub fn gaussian2d(scheme: Variant, n_participants: usize, master_seed: u64) -> ExperimentConfig {
    gaussian_protocol(DataSource::Gaussian2d { n_per_class: 10_000 }, scheme, n_participants, master_seed)
}

pub fn gaussian10d(scheme: Variant, n_participants: usize, master_seed: u64) -> ExperimentConfig {
    gaussian_protocol(DataSource::Gaussian10d { n_per_class: 10_000 }, scheme, n_participants, master_seed)
}

/// Two-block CNN, 10 epochs at learning rate 0.05, f32, on the balanced
/// subset split 5:1 into train and test.
pub fn mnist(scheme: Variant, n_participants: usize, master_seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: "mnist".into(),
        n_participants,
        partition_weights: PartitionWeights::default(),
        scheme,
        mode: Mode::Collaborative,
        model: ModelSpec::standard_cnn((1, 28, 28), 10).architecture,
        train: TrainConfig { learning_rate: 0.05, batch_size: 32, epochs: 10, weight_decay: 0.0, seed: 0 },
        data: DataConfig {
            source: DataSource::MnistDir { dir: mnist_dir(), per_class: Some(MNIST_PER_CLASS) },
            scaling: Scaling::Unit,
            test_fraction: 1.0 / 6.0,
        },
        master_seed,
        precision: Precision::F32,
        validation_fraction: 0.1,
        overlap: OverlapConfig { subsample: 0, ..Default::default() },
    }
}
