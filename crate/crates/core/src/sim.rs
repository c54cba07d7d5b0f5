//! The participant/coordinator simulation: partitioning, per-participant
//! obfuscation, anonymised pooling, collaborative and non-collaborative
//! training, parameter sweeps and the results CSV.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{
    augment_gaussian_scaled, gen_gaussian_classes, load_csv, load_mnist_dir, load_mnist_idx, two_gaussians_10d,
    two_gaussians_2d, Dataset, LabeledSample, Scaler, Scaling,
};
use crate::error::{Error, Result};
use crate::learner::{self, metrics_from_predictions, Architecture, History, MetricsCore, ModelSpec, Real, TrainConfig};
use crate::obfuscate::{deserialize_shard, participant_seed, rr_epsilon, CostReport, ObfuscationScheme, Obfuscator, Variant};
use crate::privacy::{overlap_rate, OverlapParams};
use crate::randmat::MatrixKind;
use crate::rng::{derive_seed, Prng};

// Participant seeds occupy streams 0..N of the master seed; everything else
// lives far above.
const STREAM_BASE: u64 = 1 << 48;
const DATA_STREAM: u64 = STREAM_BASE;
const PARTITION_STREAM: u64 = STREAM_BASE + 1;
const TEST_PARTITION_STREAM: u64 = STREAM_BASE + 2;
const POOL_STREAM: u64 = STREAM_BASE + 3;
const VALID_STREAM: u64 = STREAM_BASE + 4;
const TRAIN_STREAM: u64 = STREAM_BASE + 5;
const OVERLAP_STREAM: u64 = STREAM_BASE + 6;
const REPEAT_STREAM: u64 = STREAM_BASE + (1 << 20);

const WEIGHT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Collaborative,
    NonCollaborative,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Collaborative => "collaborative",
            Mode::NonCollaborative => "non_collaborative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

/// Named uneven splits of the training data across participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightProfile {
    Even,
    /// Participant `i` gets weight proportional to `i + 1`.
    LinearRamp,
    /// Half the data to participant 0, the rest shared evenly.
    HeavyHead,
    /// The first `⌈N/2⌉` participants get three times the share of the others
    /// (0.15 and 0.05 at N = 10).
    TwoTier,
}

impl WeightProfile {
    pub const ALL: [WeightProfile; 4] = [WeightProfile::Even, WeightProfile::LinearRamp, WeightProfile::HeavyHead, WeightProfile::TwoTier];

    pub fn weights(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::config("n_participants", "must be positive"));
        }
        let raw: Vec<f64> = match self {
            WeightProfile::Even => vec![1.0; n],
            WeightProfile::LinearRamp => (1..=n).map(|i| i as f64).collect(),
            WeightProfile::HeavyHead if n == 1 => vec![1.0],
            WeightProfile::HeavyHead => {
                let mut w = vec![0.5 / (n - 1) as f64; n];
                w[0] = 0.5;
                return Ok(w);
            }
            WeightProfile::TwoTier => (0..n).map(|i| if i < n.div_ceil(2) { 3.0 } else { 1.0 }).collect(),
        };
        let total: f64 = raw.iter().sum();
        Ok(raw.into_iter().map(|w| w / total).collect())
    }

    pub fn label(&self) -> &'static str {
        match self {
            WeightProfile::Even => "even",
            WeightProfile::LinearRamp => "linear_ramp",
            WeightProfile::HeavyHead => "heavy_head",
            WeightProfile::TwoTier => "two_tier",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartitionWeights {
    Profile(WeightProfile),
    Explicit(Vec<f64>),
}

impl Default for PartitionWeights {
    fn default() -> Self {
        PartitionWeights::Profile(WeightProfile::Even)
    }
}

impl PartitionWeights {
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            PartitionWeights::Profile(p) => p.weights(n),
            PartitionWeights::Explicit(w) if w.len() != n => {
                Err(Error::config("partition_weights", format!("{} weights given for {n} participants", w.len())))
            }
            PartitionWeights::Explicit(w) => Ok(w.clone()),
        }
    }
}

/// Where the samples come from. Every source except the official MNIST
/// split is divided into train and test sets by `test_fraction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Gaussian2d { n_per_class: usize },
    Gaussian10d { n_per_class: usize },
    GaussianClasses { means: Vec<Vec<f64>>, cov_scale: f64, n_per_class: usize },
    /// All IDX pairs in `dir`, optionally reduced to `per_class` samples of each digit.
    MnistDir { dir: PathBuf, per_class: Option<usize> },
    MnistIdx { train_images: PathBuf, train_labels: PathBuf, test_images: PathBuf, test_labels: PathBuf },
    /// The training part is augmented to `augment_copies` copies with noise of
    /// `augment_factor` per-feature standard deviations.
    Csv {
        path: PathBuf,
        label_column: usize,
        n_classes: usize,
        #[serde(default = "one")]
        augment_copies: usize,
        #[serde(default = "default_augment_factor")]
        augment_factor: f64,
    },
    Cache { path: PathBuf },
}

fn one() -> usize {
    1
}

fn default_augment_factor() -> f64 {
    0.05
}

fn default_test_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub source: DataSource,
    #[serde(default)]
    pub scaling: Scaling,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

impl DataConfig {
    /// Builds the scaled `(train, test)` pair; the scaler is fitted on the
    /// training part.
    pub fn load(&self, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::config("test_fraction", format!("must lie in (0, 1), got {}", self.test_fraction)));
        }
        let (gen_seed, split_seed, aug_seed) = (derive_seed(seed, 0), derive_seed(seed, 1), derive_seed(seed, 2));
        let split = |ds: Dataset| ds.stratified_split(self.test_fraction, split_seed);
        let (train, test) = match &self.source {
            DataSource::Gaussian2d { n_per_class } => split(two_gaussians_2d(*n_per_class, gen_seed)?)?,
            DataSource::Gaussian10d { n_per_class } => split(two_gaussians_10d(*n_per_class, gen_seed)?)?,
            DataSource::GaussianClasses { means, cov_scale, n_per_class } => {
                split(gen_gaussian_classes(means, *cov_scale, *n_per_class, gen_seed)?)?
            }
            DataSource::MnistDir { dir, per_class } => {
                let all = load_mnist_dir(dir)?;
                match per_class {
                    Some(p) => split(all.class_balanced_subset(*p, gen_seed)?)?,
                    None => split(all)?,
                }
            }
            DataSource::MnistIdx { train_images, train_labels, test_images, test_labels } => {
                (load_mnist_idx(train_images, train_labels)?, load_mnist_idx(test_images, test_labels)?)
            }
            DataSource::Csv { path, label_column, n_classes, augment_copies, augment_factor } => {
                let (train, test) = split(load_csv(path, *label_column, *n_classes)?)?;
                if *augment_copies > 1 {
                    (augment_gaussian_scaled(&train, *augment_factor, *augment_copies, aug_seed)?, test)
                } else {
                    (train, test)
                }
            }
            DataSource::Cache { path } => split(Dataset::load(path)?)?,
        };
        if train.is_empty() || test.is_empty() {
            return Err(Error::config("data", "train and test sets must both be non-empty"));
        }
        let scaler = Scaler::fit(self.scaling, &train);
        Ok((scaler.apply(&train)?, scaler.apply(&test)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapConfig {
    /// Pooled training vectors examined; 0 skips the measurement.
    pub subsample: usize,
    pub radius: f64,
    pub n_min: usize,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        let p = OverlapParams::default();
        Self { subsample: 1000, radius: p.radius, n_min: p.n_min }
    }
}

fn default_name() -> String {
    "experiment".into()
}

fn default_validation_fraction() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub n_participants: usize,
    #[serde(default)]
    pub partition_weights: PartitionWeights,
    /// Instantiated once per participant with that participant's seed.
    pub scheme: Variant,
    #[serde(default)]
    pub mode: Mode,
    /// Input and output sizes follow from the data and the scheme.
    pub model: Architecture,
    /// `seed` is ignored; training draws from the master seed.
    pub train: TrainConfig,
    pub data: DataConfig,
    pub master_seed: u64,
    #[serde(default)]
    pub precision: Precision,
    /// Share of each training pool held out for model selection.
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    #[serde(default)]
    pub overlap: OverlapConfig,
}

impl ExperimentConfig {
    /// Checks what can be checked without loading data.
    pub fn validate(&self) -> Result<()> {
        if self.n_participants == 0 {
            return Err(Error::config("n_participants", "must be positive"));
        }
        let w = self.partition_weights.resolve(self.n_participants)?;
        check_weights(&w)?;
        self.scheme.validate()?;
        if let Variant::Projection { kind: MatrixKind::Conditioned { .. }, compression_ratio } = self.scheme {
            if compression_ratio != 1.0 {
                return Err(Error::config("compression_ratio", "conditioned matrices are square, so the ratio must be 1"));
            }
        }
        if !(self.train.learning_rate > 0.0 && self.train.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if self.train.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::config("validation_fraction", "must lie in [0, 1)"));
        }
        if !(self.overlap.radius > 0.0) || self.overlap.n_min == 0 {
            return Err(Error::config("overlap", "radius must be positive and n_min at least 1"));
        }
        Ok(())
    }

    fn train_seed(&self) -> u64 {
        derive_seed(self.master_seed, TRAIN_STREAM)
    }
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::config("partition_weights", "at least one weight is required"));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::config("partition_weights", "weights must be finite and non-negative"));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::config("partition_weights", format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}

/// Largest-remainder apportionment of `n` items: floors of `w_i·n`, then one
/// extra item to each of the largest fractional parts (ties to the lower index).
pub fn largest_remainder(weights: &[f64], n: usize) -> Vec<usize> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Splits `ds` into disjoint shards with largest-remainder sizes. Samples
/// are interleaved by class before cutting, so each shard's class mix
/// follows the dataset's.
pub fn partition(ds: &Dataset, weights: &[f64], seed: u64) -> Result<Vec<Dataset>> {
    check_weights(weights)?;
    if ds.len() < weights.len() {
        return Err(Error::config("n_participants", format!("{} samples cannot cover {} participants", ds.len(), weights.len())));
    }
    let sizes = largest_remainder(weights, ds.len());
    if let Some(i) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::config("partition_weights", format!("participant {i} would receive no samples")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for (i, s) in ds.samples().iter().enumerate() {
        by_class[s.y].push(i);
    }
    let mut rng = Prng::new(seed);
    let mut keyed = Vec::with_capacity(ds.len());
    for (c, members) in by_class.iter_mut().enumerate() {
        rng.shuffle(members);
        let n_c = members.len() as f64;
        keyed.extend(members.iter().enumerate().map(|(j, &i)| ((j as f64 + 0.5) / n_c, c, i)));
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut shards = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for size in sizes {
        let idx: Vec<usize> = keyed[start..start + size].iter().map(|k| k.2).collect();
        shards.push(ds.subset(&idx));
        start += size;
    }
    Ok(shards)
}

/// One participant with its private, time-invariant obfuscator.
#[derive(Debug, Clone)]
pub struct Participant {
    index: usize,
    obfuscator: Obfuscator,
}

impl Participant {
    pub fn new(index: usize, template: Variant, master_seed: u64, d: usize, value_range: (f64, f64)) -> Result<Self> {
        let scheme = ObfuscationScheme::new(template, participant_seed(master_seed, index));
        Ok(Self { index, obfuscator: Obfuscator::new(scheme, d, value_range)? })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn obfuscator(&self) -> &Obfuscator {
        &self.obfuscator
    }

    /// Obfuscated, serialised training shard and its cost.
    pub fn upload(&self, shard: &[LabeledSample]) -> Result<(Vec<u8>, CostReport)> {
        if shard.is_empty() {
            return Err(Error::config("shard", format!("participant {} has no samples", self.index)));
        }
        self.obfuscator.obfuscate_shard(shard)
    }

    /// Test vectors go through the same matrix; randomised schemes continue
    /// the sample index after the training shard.
    pub fn upload_test(&self, samples: &[LabeledSample], first_index: u64) -> Result<(Vec<u8>, CostReport)> {
        self.obfuscator.obfuscate_shard_from(samples, first_index)
    }
}

/// Obfuscates one participant's shard with a fresh scheme seeded from
/// `(master_seed, participant_index)`.
pub fn run_participant(participant_index: usize, shard: &Dataset, template: Variant, master_seed: u64) -> Result<(Vec<u8>, CostReport)> {
    Participant::new(participant_index, template, master_seed, shard.dim(), shard.value_range())?.upload(shard.samples())
}

/// The coordinator's view of the uploads: one shuffled stream without origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    pub vec_len: usize,
    pub samples: Vec<LabeledSample>,
}

/// Decodes the shards, concatenates them in the order given and applies a
/// seeded uniform permutation.
pub fn anonymize_pool(shards: &[Vec<u8>], seed: u64) -> Result<Pool> {
    let mut vec_len = None;
    let mut samples = Vec::new();
    for bytes in shards {
        let shard = deserialize_shard(bytes)?;
        match vec_len {
            None => vec_len = Some(shard.vec_len),
            Some(len) if len != shard.vec_len => {
                return Err(Error::Format(format!("cannot pool vectors of length {} with length {len}", shard.vec_len)));
            }
            Some(_) => {}
        }
        samples.extend(shard.samples);
    }
    let vec_len = vec_len.ok_or_else(|| Error::config("shards", "nothing to pool"))?;
    Prng::new(seed).shuffle(&mut samples);
    Ok(Pool { vec_len, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NclSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mode: Mode,
    /// Length of the vectors the coordinator receives.
    pub projected_dim: usize,
    /// Over all test vectors (pooled, or every participant's own in NCL mode).
    pub test_accuracy: f64,
    pub per_class_f1: Vec<f64>,
    pub confusion: Vec<Vec<usize>>,
    pub ncl_accuracy: Option<NclSummary>,
    pub ncl_per_participant: Vec<f64>,
    pub overlap_rate_projected: Option<f64>,
    /// Training uploads, one per participant.
    pub per_participant_costs: Vec<CostReport>,
    pub coordinator_train_time: f64,
    pub histories: Vec<History>,
}

impl MetricsReport {
    fn mean_cost(&self, f: impl Fn(&CostReport) -> f64) -> f64 {
        self.per_participant_costs.iter().map(f).sum::<f64>() / self.per_participant_costs.len().max(1) as f64
    }

    pub fn bytes_per_participant(&self) -> f64 {
        self.mean_cost(|c| c.bytes_out as f64)
    }

    pub fn adds_per_participant(&self) -> f64 {
        self.mean_cost(|c| c.additions as f64)
    }

    pub fn muls_per_participant(&self) -> f64 {
        self.mean_cost(|c| c.multiplications as f64)
    }

    pub fn participant_time(&self) -> f64 {
        self.mean_cost(|c| c.wall_time)
    }

    /// The report with every wall-clock field zeroed, for determinism checks.
    pub fn without_timings(&self) -> MetricsReport {
        let mut out = self.clone();
        out.coordinator_train_time = 0.0;
        for c in &mut out.per_participant_costs {
            c.wall_time = 0.0;
        }
        out
    }
}

/// Runs `f(0..n)`, spreading indices over `threads` workers; results keep index order.
fn parallel_map<T: Send, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync,
{
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let threads = threads.min(n);
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        let f = &f;
        let workers: Vec<_> = (0..threads)
            .map(|t| scope.spawn(move || (t..n).step_by(threads).map(|i| (i, f(i))).collect::<Vec<_>>()))
            .collect();
        for w in workers {
            for (i, v) in w.join().expect("worker thread panicked") {
                slots[i] = Some(v);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every index is produced")).collect()
}

/// Model input layout for `k`-vectors: flat for MLPs; for CNNs the original
/// image shape when nothing was projected away, otherwise a zero-padded
/// `⌊√k⌋ × ⌈k/⌊√k⌋⌉` single-channel image.
pub fn coordinator_spec(arch: &Architecture, k: usize, d: usize, shape: Option<(usize, usize, usize)>, n_classes: usize) -> ModelSpec {
    let input_shape = match arch {
        Architecture::Mlp { .. } => (k, 1, 1),
        Architecture::Cnn { .. } => match shape {
            Some(s) if k == d => s,
            _ => {
                let mut h = (k as f64).sqrt() as usize;
                while (h + 1) * (h + 1) <= k {
                    h += 1;
                }
                while h * h > k {
                    h -= 1;
                }
                (1, h.max(1), k.div_ceil(h.max(1)))
            }
        },
    };
    ModelSpec { architecture: arch.clone(), input_shape, n_classes }
}

fn padded_dataset(samples: Vec<LabeledSample>, len: usize, n_classes: usize) -> Result<Dataset> {
    let samples = samples
        .into_iter()
        .map(|mut s| {
            s.x.resize(len, 0.0);
            s
        })
        .collect();
    Dataset::new(samples, len, n_classes)
}

struct Fitted {
    predictions: Vec<usize>,
    history: History,
}

fn fit_predict(spec: &ModelSpec, train: &Dataset, valid: &Dataset, test: &Dataset, cfg: &TrainConfig, precision: Precision) -> Result<Fitted> {
    fn run<T: Real>(spec: &ModelSpec, train: &Dataset, valid: &Dataset, test: &Dataset, cfg: &TrainConfig) -> Result<Fitted> {
        let (model, history) = learner::train::<T>(spec, train, valid, cfg)?;
        let predictions = learner::predict_dataset(&model, test)?;
        Ok(Fitted { predictions, history })
    }
    match precision {
        Precision::F32 => run::<f32>(spec, train, valid, test, cfg),
        Precision::F64 => run::<f64>(spec, train, valid, test, cfg),
    }
}

fn hold_out(ds: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if fraction == 0.0 {
        return Ok((ds.clone(), ds.subset(&[])));
    }
    let (train, valid) = ds.stratified_split(fraction, seed)?;
    if train.is_empty() {
        return Err(Error::config("validation_fraction", "holding out validation data leaves no training data"));
    }
    Ok((train, valid))
}

/// Runs one experiment with participants (and NCL models) on one thread.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MetricsReport> {
    run_experiment_with(config, 1)
}

/// As [`run_experiment`], spreading participants and NCL models over
/// `threads` workers. Results do not depend on `threads`.
pub fn run_experiment_with(config: &ExperimentConfig, threads: usize) -> Result<MetricsReport> {
    config.validate()?;
    let master = config.master_seed;
    let (train_ds, test_ds) = config.data.load(derive_seed(master, DATA_STREAM))?;
    let (d, n_classes) = (train_ds.dim(), train_ds.n_classes().max(test_ds.n_classes()));
    if test_ds.dim() != d {
        return Err(Error::Dimension { expected: d, got: test_ds.dim() });
    }
    let weights = config.partition_weights.resolve(config.n_participants)?;
    let train_shards = partition(&train_ds, &weights, derive_seed(master, PARTITION_STREAM))?;
    let test_shards = partition(&test_ds, &weights, derive_seed(master, TEST_PARTITION_STREAM))?;
    let (tr, te) = (train_ds.value_range(), test_ds.value_range());
    let value_range = (tr.0.min(te.0), tr.1.max(te.1));

    let uploads = parallel_map(config.n_participants, threads, |i| -> Result<_> {
        let p = Participant::new(i, config.scheme, master, d, value_range)?;
        let (train_bytes, cost) = p.upload(train_shards[i].samples())?;
        let (test_bytes, _) = p.upload_test(test_shards[i].samples(), train_shards[i].len() as u64)?;
        Ok((train_bytes, test_bytes, cost))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let costs: Vec<CostReport> = uploads.iter().map(|u| u.2).collect();
    let train_bytes: Vec<Vec<u8>> = uploads.iter().map(|u| u.0.clone()).collect();

    let pool = anonymize_pool(&train_bytes, derive_seed(master, POOL_STREAM))?;
    let k = pool.vec_len;
    let spec = coordinator_spec(&config.model, k, d, train_ds.shape(), n_classes);
    let len = spec.input_dim();
    let overlap = measure_overlap(&pool, config.overlap, derive_seed(master, OVERLAP_STREAM))?;
    let mut train_cfg = config.train;
    train_cfg.seed = config.train_seed();

    let start = Instant::now();
    let report = match config.mode {
        Mode::Collaborative => {
            let pooled = padded_dataset(pool.samples, len, n_classes)?;
            let (train, valid) = hold_out(&pooled, config.validation_fraction, derive_seed(master, VALID_STREAM))?;
            let mut test_samples = Vec::new();
            for u in &uploads {
                test_samples.extend(deserialize_shard(&u.1)?.samples);
            }
            let test = padded_dataset(test_samples, len, n_classes)?;
            let fitted = fit_predict(&spec, &train, &valid, &test, &train_cfg, config.precision)?;
            let core = metrics_from_predictions(&test.labels(), &fitted.predictions, n_classes)?;
            assemble(config.mode, k, core, None, Vec::new(), overlap, costs, vec![fitted.history])
        }
        Mode::NonCollaborative => {
            let fitted = parallel_map(config.n_participants, threads, |i| -> Result<(Vec<usize>, Vec<usize>, History)> {
                let own = padded_dataset(deserialize_shard(&uploads[i].0)?.samples, len, n_classes)?;
                let test = padded_dataset(deserialize_shard(&uploads[i].1)?.samples, len, n_classes)?;
                let (train, valid) = hold_out(&own, config.validation_fraction, derive_seed(derive_seed(master, VALID_STREAM), i as u64))?;
                let mut cfg = train_cfg;
                cfg.seed = derive_seed(train_cfg.seed, i as u64);
                cfg.batch_size = cfg.batch_size.min(train.len());
                let f = fit_predict(&spec, &train, &valid, &test, &cfg, config.precision)?;
                Ok((test.labels(), f.predictions, f.history))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let per: Vec<f64> = fitted
                .iter()
                .map(|(t, p, _)| t.iter().zip(p).filter(|(a, b)| a == b).count() as f64 / t.len() as f64)
                .collect();
            let summary = NclSummary {
                min: per.iter().copied().fold(f64::INFINITY, f64::min),
                mean: per.iter().sum::<f64>() / per.len() as f64,
                max: per.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            };
            let truth: Vec<usize> = fitted.iter().flat_map(|f| f.0.iter().copied()).collect();
            let predicted: Vec<usize> = fitted.iter().flat_map(|f| f.1.iter().copied()).collect();
            let core = metrics_from_predictions(&truth, &predicted, n_classes)?;
            let histories = fitted.into_iter().map(|f| f.2).collect();
            assemble(config.mode, k, core, Some(summary), per, overlap, costs, histories)
        }
    };
    Ok(MetricsReport { coordinator_train_time: start.elapsed().as_secs_f64(), ..report })
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    mode: Mode,
    k: usize,
    core: MetricsCore,
    ncl: Option<NclSummary>,
    ncl_per_participant: Vec<f64>,
    overlap: Option<f64>,
    costs: Vec<CostReport>,
    histories: Vec<History>,
) -> MetricsReport {
    MetricsReport {
        mode,
        projected_dim: k,
        test_accuracy: core.accuracy,
        per_class_f1: core.per_class_f1,
        confusion: core.confusion,
        ncl_accuracy: ncl,
        ncl_per_participant,
        overlap_rate_projected: overlap,
        per_participant_costs: costs,
        coordinator_train_time: 0.0,
        histories,
    }
}

fn measure_overlap(pool: &Pool, cfg: OverlapConfig, seed: u64) -> Result<Option<f64>> {
    if cfg.subsample == 0 || pool.samples.is_empty() {
        return Ok(None);
    }
    let n = cfg.subsample.min(pool.samples.len());
    let mut idx = Prng::new(seed).choose_distinct(pool.samples.len(), n);
    idx.sort_unstable();
    let points: Vec<Vec<f64>> = idx.iter().map(|&i| pool.samples[i].x.clone()).collect();
    let labels: Vec<usize> = idx.iter().map(|&i| pool.samples[i].y).collect();
    overlap_rate(&points, &labels, OverlapParams { radius: cfg.radius, n_min: cfg.n_min }).map(Some)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "n", alias = "n_participants")]
    N,
    #[serde(rename = "rho", alias = "compression_ratio")]
    Rho,
    #[serde(rename = "epsilon")]
    Epsilon,
    #[serde(rename = "rr_f")]
    RrF,
    #[serde(rename = "kappa", alias = "condition_kappa")]
    Kappa,
    #[serde(rename = "projection_kind")]
    ProjectionKind,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::N => "n",
            SweepAxis::Rho => "rho",
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::RrF => "rr_f",
            SweepAxis::Kappa => "kappa",
            SweepAxis::ProjectionKind => "projection_kind",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Label(String),
}

impl std::fmt::Display for AxisValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisValue::Number(v) => write!(f, "{v}"),
            AxisValue::Label(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<AxisValue>,
    #[serde(default = "one")]
    pub repeats: usize,
}

/// Projection family by name: `grp`, `rrp` or `brp` (three ones per column).
pub fn projection_kind(label: &str) -> Result<MatrixKind> {
    match label {
        "grp" | "gaussian" => Ok(MatrixKind::gaussian()),
        "rrp" | "rademacher" => Ok(MatrixKind::Rademacher),
        "brp" | "binary" => Ok(MatrixKind::Binary { ones: 3 }),
        other => Err(Error::config("values", format!("unknown projection kind {other:?}"))),
    }
}

/// The config with one axis set to `value`.
pub fn apply_axis(config: &ExperimentConfig, axis: SweepAxis, value: &AxisValue) -> Result<ExperimentConfig> {
    let mut out = config.clone();
    let number = || match value {
        AxisValue::Number(v) => Ok(*v),
        AxisValue::Label(s) => Err(Error::config("values", format!("axis {} needs numbers, got {s:?}", axis.label()))),
    };
    let mismatch = || Error::config("axis", format!("axis {} does not apply to scheme {}", axis.label(), config.scheme.label()));
    match (axis, &mut out.scheme) {
        (SweepAxis::N, _) => {
            let v = number()?;
            if !(v >= 1.0 && v.fract() == 0.0) {
                return Err(Error::config("values", format!("participant counts must be positive integers, got {v}")));
            }
            out.n_participants = v as usize;
        }
        (SweepAxis::Rho, Variant::Projection { kind, compression_ratio }) if !matches!(kind, MatrixKind::Conditioned { .. }) => {
            *compression_ratio = number()?;
        }
        (SweepAxis::Epsilon, Variant::LaplaceDp { epsilon, .. }) => *epsilon = number()?,
        (SweepAxis::RrF, Variant::RandomizedResponse { f, .. }) => *f = number()?,
        (SweepAxis::Kappa, Variant::Projection { kind: MatrixKind::Conditioned { kappa }, .. }) => *kappa = number()?,
        (SweepAxis::ProjectionKind, Variant::Projection { kind, .. }) if !matches!(kind, MatrixKind::Conditioned { .. }) => {
            *kind = match value {
                AxisValue::Label(s) => projection_kind(s)?,
                AxisValue::Number(v) => return Err(Error::config("values", format!("projection kinds are names, got {v}"))),
            };
        }
        _ => return Err(mismatch()),
    }
    out.validate()?;
    Ok(out)
}

/// One line of the results CSV. `report` is `None` when training diverged.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment_id: String,
    pub axis: String,
    pub axis_value: String,
    pub repeat: usize,
    pub seed: u64,
    pub mode: Mode,
    pub scheme: String,
    pub n_participants: usize,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub f: Option<f64>,
    pub kappa: Option<f64>,
    pub report: Option<MetricsReport>,
    pub failure: Option<String>,
}

impl ResultRow {
    /// Divergence becomes a row without metrics; other errors propagate.
    pub fn new(config: &ExperimentConfig, axis: &str, axis_value: String, repeat: usize, outcome: Result<MetricsReport>) -> Result<Self> {
        let (report, failure) = match outcome {
            Ok(r) => (Some(r), None),
            Err(e @ Error::Diverged { .. }) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        let (mut rho, mut epsilon, mut f, mut kappa) = (None, None, None, None);
        match config.scheme {
            Variant::Projection { kind, compression_ratio } => {
                rho = Some(compression_ratio);
                if let MatrixKind::Conditioned { kappa: c } = kind {
                    kappa = Some(c);
                }
            }
            Variant::LaplaceDp { epsilon: e, .. } => epsilon = Some(e),
            Variant::RandomizedResponse { f: flip, .. } => {
                f = Some(flip);
                epsilon = Some(rr_epsilon(flip)?);
            }
            Variant::Identity => {}
        }
        Ok(Self {
            experiment_id: config.name.clone(),
            axis: axis.to_string(),
            axis_value,
            repeat,
            seed: config.master_seed,
            mode: config.mode,
            scheme: config.scheme.label().to_string(),
            n_participants: config.n_participants,
            rho,
            epsilon,
            f,
            kappa,
            report,
            failure,
        })
    }

    /// Fields in [`csv_header`] order; missing values are empty.
    pub fn record(&self, n_classes: usize) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let r = self.report.as_ref();
        let mut out = vec![
            self.experiment_id.clone(),
            self.axis.clone(),
            self.axis_value.clone(),
            self.repeat.to_string(),
            self.seed.to_string(),
            self.mode.label().to_string(),
            self.scheme.clone(),
            self.n_participants.to_string(),
            opt(self.rho),
            opt(self.epsilon),
            opt(self.f),
            opt(self.kappa),
            opt(r.map(|r| r.test_accuracy)),
        ];
        for c in 0..n_classes {
            out.push(opt(r.and_then(|r| r.per_class_f1.get(c).copied())));
        }
        let ncl = r.and_then(|r| r.ncl_accuracy);
        out.extend([
            opt(ncl.map(|s| s.min)),
            opt(ncl.map(|s| s.mean)),
            opt(ncl.map(|s| s.max)),
            opt(r.and_then(|r| r.overlap_rate_projected)),
            opt(r.map(|r| r.bytes_per_participant())),
            opt(r.map(|r| r.adds_per_participant())),
            opt(r.map(|r| r.muls_per_participant())),
            opt(r.map(|r| r.participant_time())),
            opt(r.map(|r| r.coordinator_train_time)),
        ]);
        out
    }
}

/// Columns holding wall-clock measurements.
pub const TIMING_COLUMNS: [&str; 2] = ["participant_time_s", "coordinator_time_s"];

pub fn csv_header(n_classes: usize) -> Vec<String> {
    let mut h: Vec<String> = ["experiment_id", "axis", "axis_value", "repeat", "seed", "mode", "scheme", "N", "rho", "epsilon", "f", "kappa", "test_accuracy"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..n_classes).map(|c| format!("f1_class_{c}")));
    h.extend(
        [
            "ncl_min",
            "ncl_mean",
            "ncl_max",
            "overlap_rate",
            "bytes_per_participant",
            "adds_per_participant",
            "muls_per_participant",
            TIMING_COLUMNS[0],
            TIMING_COLUMNS[1],
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

pub fn write_csv<W: Write>(w: W, rows: &[ResultRow], n_classes: usize) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(csv_header(n_classes))?;
    for row in rows {
        out.write_record(row.record(n_classes))?;
    }
    out.flush()?;
    Ok(())
}

/// A single run as a one-row result set.
pub fn run_single(config: &ExperimentConfig, threads: usize) -> Result<ResultRow> {
    ResultRow::new(config, "none", String::new(), 0, run_experiment_with(config, threads))
}

/// Seed of repeat `r` of a sweep over `master_seed`; shared by all axis
/// values so that comparisons across values are paired.
pub fn repeat_seed(master_seed: u64, repeat: usize) -> u64 {
    derive_seed(master_seed, REPEAT_STREAM + repeat as u64)
}

/// One row per `(value, repeat)`, values outermost.
pub fn sweep(config: &ExperimentConfig, plan: &SweepConfig, threads: usize) -> Result<Vec<ResultRow>> {
    sweep_with(config, plan, threads, |_| {})
}

/// As [`sweep`], calling `on_row` as each row completes.
pub fn sweep_with(config: &ExperimentConfig, plan: &SweepConfig, threads: usize, mut on_row: impl FnMut(&ResultRow)) -> Result<Vec<ResultRow>> {
    if plan.values.is_empty() || plan.repeats == 0 {
        return Err(Error::config("sweep", "needs at least one value and one repeat"));
    }
    let configs = plan.values.iter().map(|v| apply_axis(config, plan.axis, v)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(configs.len() * plan.repeats);
    for (value, base) in plan.values.iter().zip(&configs) {
        for r in 0..plan.repeats {
            let mut cfg = base.clone();
            cfg.master_seed = repeat_seed(config.master_seed, r);
            let row = ResultRow::new(&cfg, plan.axis.label(), value.to_string(), r, run_experiment_with(&cfg, threads))?;
            on_row(&row);
            rows.push(row);
        }
    }
    Ok(rows)
}
