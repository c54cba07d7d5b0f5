//! Participant-side transforms: random projection with compression, the
//! Laplace mechanism, one-round randomized response and the identity, plus
//! the shard wire format and arithmetic/byte accounting.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::LabeledSample;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::randmat::{MatrixKind, ProjectionMatrix};
use crate::rng::{derive_seed, Prng};

const SHARD_MAGIC: &[u8; 8] = b"PPCLSHD1";
pub const SHARD_HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Variant {
    Projection { kind: MatrixKind, compression_ratio: f64 },
    /// `sensitivity: None` uses the width of the data's value range.
    LaplaceDp { epsilon: f64, sensitivity: Option<f64> },
    RandomizedResponse { f: f64, bit_depth: u32 },
    Identity,
}

impl Variant {
    /// Wire tag; no participant information is encoded.
    pub fn tag(&self) -> u8 {
        match self {
            Variant::Identity => 0,
            Variant::Projection { kind: MatrixKind::Gaussian { .. }, .. } => 1,
            Variant::Projection { kind: MatrixKind::Rademacher, .. } => 2,
            Variant::Projection { kind: MatrixKind::Binary { .. }, .. } => 3,
            Variant::Projection { kind: MatrixKind::Conditioned { .. }, .. } => 4,
            Variant::LaplaceDp { .. } => 5,
            Variant::RandomizedResponse { .. } => 6,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Variant::Identity => "identity",
            Variant::Projection { kind, .. } => kind.label(),
            Variant::LaplaceDp { .. } => "laplace",
            Variant::RandomizedResponse { .. } => "rr",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Variant::Projection { compression_ratio, .. } => {
                if !(compression_ratio >= 1.0 && compression_ratio.is_finite()) {
                    return Err(Error::config("compression_ratio", format!("must be >= 1, got {compression_ratio}")));
                }
            }
            Variant::LaplaceDp { epsilon, sensitivity } => {
                if !(epsilon > 0.0) {
                    return Err(Error::config("epsilon", format!("must be positive, got {epsilon}")));
                }
                if let Some(s) = sensitivity {
                    if !(s > 0.0 && s.is_finite()) {
                        return Err(Error::config("sensitivity", format!("must be positive, got {s}")));
                    }
                }
            }
            Variant::RandomizedResponse { f, bit_depth } => {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::config("f", format!("must lie in [0, 1], got {f}")));
                }
                if !(1..=32).contains(&bit_depth) {
                    return Err(Error::config("bit_depth", format!("must lie in 1..=32, got {bit_depth}")));
                }
            }
            Variant::Identity => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObfuscationScheme {
    pub variant: Variant,
    pub seed: u64,
}

impl ObfuscationScheme {
    pub fn new(variant: Variant, seed: u64) -> Self {
        Self { variant, seed }
    }

    /// The same scheme with a different seed, e.g. one per participant.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self { variant: self.variant, seed }
    }

    /// Output length for `d`-dimensional inputs.
    pub fn output_dim(&self, d: usize) -> Result<usize> {
        match self.variant {
            Variant::Projection { kind: MatrixKind::Conditioned { .. }, compression_ratio } if compression_ratio != 1.0 => {
                Err(Error::config("compression_ratio", "conditioned matrices are square"))
            }
            Variant::Projection { compression_ratio, .. } => projected_dim(d, compression_ratio),
            _ => Ok(d),
        }
    }
}

/// `k = round(d / ρ)`, required to satisfy `1 ≤ k ≤ d`.
pub fn projected_dim(d: usize, compression_ratio: f64) -> Result<usize> {
    if !(compression_ratio >= 1.0 && compression_ratio.is_finite()) {
        return Err(Error::config("compression_ratio", format!("must be >= 1, got {compression_ratio}")));
    }
    let k = (d as f64 / compression_ratio).round() as usize;
    if k == 0 {
        return Err(Error::config("compression_ratio", format!("ratio {compression_ratio} leaves no dimensions of {d}")));
    }
    Ok(k.min(d))
}

/// Privacy loss per bit of one-round randomized response with flip
/// parameter `f`: `2 ln((1 − f/2) / (f/2))`. `f = 0` reports the input
/// unchanged and yields `+∞` (no privacy).
pub fn rr_epsilon(f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::config("f", format!("must lie in [0, 1], got {f}")));
    }
    if f == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * ((1.0 - f / 2.0) / (f / 2.0)).ln())
}

/// Per-element variance `2 (S_F / ε)²` of Laplace noise.
pub fn dp_variance(epsilon: f64, sensitivity: f64) -> Result<f64> {
    if !(epsilon > 0.0 && sensitivity > 0.0) {
        return Err(Error::config("epsilon", "epsilon and sensitivity must be positive"));
    }
    Ok(2.0 * (sensitivity / epsilon).powi(2))
}

/// Inverse of [`dp_variance`]: `ε = S_F √(2 / v)`.
pub fn epsilon_for_variance(variance: f64, sensitivity: f64) -> Result<f64> {
    if !(variance > 0.0 && sensitivity > 0.0) {
        return Err(Error::config("variance", "variance and sensitivity must be positive"));
    }
    Ok(sensitivity * (2.0 / variance).sqrt())
}

/// Arithmetic counters filled in by instrumented transforms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OpCount {
    pub additions: u64,
    pub multiplications: u64,
}

/// Operation counts for projecting one vector as stated in the literature
/// (`M → k`, `N → d`): binary `S·d − k` additions; Rademacher `k(d − 1)`
/// additions and one multiplication; Gaussian `k(d − 1)` additions and `k·d²`
/// multiplications.
pub fn paper_projection_cost(kind: MatrixKind, k: usize, d: usize) -> OpCount {
    let (k, d) = (k as u64, d as u64);
    match kind {
        MatrixKind::Binary { ones } => OpCount { additions: (ones as u64 * d).saturating_sub(k), multiplications: 0 },
        MatrixKind::Rademacher => OpCount { additions: k * (d - 1), multiplications: 1 },
        MatrixKind::Gaussian { .. } | MatrixKind::Conditioned { .. } => {
            OpCount { additions: k * (d - 1), multiplications: k * d * d }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CostReport {
    pub n_samples: usize,
    /// Measured over the whole shard.
    pub additions: u64,
    pub multiplications: u64,
    /// Literature formula summed over the shard (0 for non-projection schemes).
    pub paper_formula_adds: u64,
    pub paper_formula_muls: u64,
    pub bytes_out: usize,
    pub wall_time: f64,
}

impl CostReport {
    pub fn additions_per_sample(&self) -> f64 {
        self.additions as f64 / self.n_samples.max(1) as f64
    }

    pub fn multiplications_per_sample(&self) -> f64 {
        self.multiplications as f64 / self.n_samples.max(1) as f64
    }
}

/// A projection prepared the way a constrained device would evaluate it.
#[derive(Debug, Clone)]
enum Projector {
    /// Scale folded into the entries: `k·d` multiplications, `k(d−1)` additions.
    Dense(Matrix),
    /// Signed sums followed by one scaling per output.
    Signs { positive: Vec<Vec<bool>>, scale: f64 },
    /// Per-row lists of columns holding a one; additions only.
    Ones(Vec<Vec<usize>>),
}

impl Projector {
    fn new(m: &ProjectionMatrix) -> Self {
        let e = m.entries();
        match m.kind() {
            MatrixKind::Rademacher => Projector::Signs {
                positive: (0..e.rows()).map(|i| e.row(i).iter().map(|&v| v > 0.0).collect()).collect(),
                scale: e.row(0)[0].abs(),
            },
            MatrixKind::Binary { .. } => Projector::Ones(
                (0..e.rows()).map(|i| e.row(i).iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, _)| j).collect()).collect(),
            ),
            _ => {
                let mut dense = e.clone();
                dense.scale(m.output_scale());
                Projector::Dense(dense)
            }
        }
    }

    fn apply(&self, x: &[f64], ops: &mut OpCount) -> Vec<f64> {
        match self {
            Projector::Dense(m) => (0..m.rows())
                .map(|i| {
                    let row = m.row(i);
                    let mut acc = row[0] * x[0];
                    for j in 1..row.len() {
                        acc += row[j] * x[j];
                    }
                    ops.multiplications += row.len() as u64;
                    ops.additions += row.len() as u64 - 1;
                    acc
                })
                .collect(),
            Projector::Signs { positive, scale } => positive
                .iter()
                .map(|signs| {
                    let mut acc = if signs[0] { x[0] } else { -x[0] };
                    for j in 1..signs.len() {
                        if signs[j] {
                            acc += x[j];
                        } else {
                            acc -= x[j];
                        }
                    }
                    ops.additions += signs.len() as u64 - 1;
                    ops.multiplications += 1;
                    acc * scale
                })
                .collect(),
            Projector::Ones(rows) => rows
                .iter()
                .map(|cols| match cols.split_first() {
                    None => 0.0,
                    Some((&first, rest)) => {
                        ops.additions += rest.len() as u64;
                        rest.iter().fold(x[first], |acc, &j| acc + x[j])
                    }
                })
                .collect(),
        }
    }
}

/// A scheme instantiated for one participant: the matrix is drawn once and
/// reused for every sample (training and test alike).
#[derive(Debug, Clone)]
pub struct Obfuscator {
    scheme: ObfuscationScheme,
    d: usize,
    value_range: (f64, f64),
    matrix: Option<ProjectionMatrix>,
    projector: Option<Projector>,
}

impl Obfuscator {
    /// `value_range` is the data's element range; it sets the Laplace
    /// sensitivity when none is configured and the randomized-response
    /// quantisation grid.
    pub fn new(scheme: ObfuscationScheme, d: usize, value_range: (f64, f64)) -> Result<Self> {
        scheme.variant.validate()?;
        let matrix = match scheme.variant {
            Variant::Projection { kind: MatrixKind::Conditioned { kappa }, .. } => {
                scheme.output_dim(d)?;
                Some(ProjectionMatrix::conditioned(d, kappa, scheme.seed)?)
            }
            Variant::Projection { kind, compression_ratio } => {
                Some(ProjectionMatrix::generate(kind, projected_dim(d, compression_ratio)?, d, scheme.seed)?)
            }
            _ => None,
        };
        if let Variant::LaplaceDp { sensitivity: None, .. } | Variant::RandomizedResponse { .. } = scheme.variant {
            if !(value_range.1 > value_range.0) {
                return Err(Error::config("value_range", "a non-degenerate value range is required"));
            }
        }
        let projector = matrix.as_ref().map(Projector::new);
        Ok(Self { scheme, d, value_range, matrix, projector })
    }

    pub fn scheme(&self) -> &ObfuscationScheme {
        &self.scheme
    }

    pub fn matrix(&self) -> Option<&ProjectionMatrix> {
        self.matrix.as_ref()
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn output_dim(&self) -> usize {
        self.matrix.as_ref().map_or(self.d, ProjectionMatrix::rows)
    }

    /// Laplace scale `S_F / ε`, if this is the Laplace scheme.
    pub fn laplace_scale(&self) -> Option<f64> {
        match self.scheme.variant {
            Variant::LaplaceDp { epsilon, sensitivity } => {
                Some(sensitivity.unwrap_or(self.value_range.1 - self.value_range.0) / epsilon)
            }
            _ => None,
        }
    }

    /// Obfuscates one vector. Randomised schemes draw from a stream seeded
    /// with `seed + sample_index`, so results do not depend on processing order.
    pub fn apply(&self, x: &[f64], sample_index: u64, ops: &mut OpCount) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(Error::Dimension { expected: self.d, got: x.len() });
        }
        let sample_seed = self.scheme.seed.wrapping_add(sample_index);
        match self.scheme.variant {
            Variant::Identity => Ok(x.to_vec()),
            Variant::Projection { .. } => Ok(self.projector.as_ref().expect("projection scheme").apply(x, ops)),
            Variant::LaplaceDp { .. } => {
                let b = self.laplace_scale().expect("laplace scheme");
                let mut rng = Prng::new(sample_seed);
                ops.additions += x.len() as u64;
                Ok(x.iter().map(|v| v + rng.laplace(b)).collect())
            }
            Variant::RandomizedResponse { f, bit_depth } => {
                let (lo, hi) = self.value_range;
                let levels = ((1u64 << bit_depth) - 1) as f64;
                let mut rng = Prng::new(sample_seed);
                x.iter()
                    .map(|&v| {
                        if !(v >= lo && v <= hi) {
                            return Err(Error::Quantization { value: v, lo, hi });
                        }
                        if f == 0.0 {
                            return Ok(v);
                        }
                        let q = ((v - lo) / (hi - lo) * levels).round() as u64;
                        let mut out = 0u64;
                        for b in 0..bit_depth {
                            let truth = (q >> b) & 1;
                            let bit = if rng.bernoulli(f) { rng.bernoulli(0.5) as u64 } else { truth };
                            out |= bit << b;
                        }
                        Ok(lo + out as f64 / levels * (hi - lo))
                    })
                    .collect()
            }
        }
    }

    /// Obfuscates a whole shard, serialises it and measures the cost.
    /// Sample `i` of the shard uses index `i`.
    pub fn obfuscate_shard(&self, samples: &[LabeledSample]) -> Result<(Vec<u8>, CostReport)> {
        self.obfuscate_shard_from(samples, 0)
    }

    /// As [`Obfuscator::obfuscate_shard`], with sample `i` using index
    /// `first_index + i`.
    pub fn obfuscate_shard_from(&self, samples: &[LabeledSample], first_index: u64) -> Result<(Vec<u8>, CostReport)> {
        let start = Instant::now();
        let mut ops = OpCount::default();
        let out = samples
            .iter()
            .enumerate()
            .map(|(i, s)| Ok(LabeledSample { x: self.apply(&s.x, first_index + i as u64, &mut ops)?, y: s.y }))
            .collect::<Result<Vec<_>>>()?;
        let bytes = serialize_shard(&out, self.scheme.variant.tag())?;
        let wall_time = start.elapsed().as_secs_f64();
        let per = match (self.scheme.variant, &self.matrix) {
            (Variant::Projection { kind, .. }, Some(m)) => paper_projection_cost(kind, m.rows(), m.cols()),
            _ => OpCount::default(),
        };
        let n = samples.len() as u64;
        let report = CostReport {
            n_samples: samples.len(),
            additions: ops.additions,
            multiplications: ops.multiplications,
            paper_formula_adds: per.additions * n,
            paper_formula_muls: per.multiplications * n,
            bytes_out: bytes.len(),
            wall_time,
        };
        Ok((bytes, report))
    }
}

/// Convenience one-shot form of [`Obfuscator::apply`] for sample index 0.
pub fn obfuscate_sample(scheme: ObfuscationScheme, value_range: (f64, f64), x: &[f64]) -> Result<Vec<f64>> {
    Obfuscator::new(scheme, x.len(), value_range)?.apply(x, 0, &mut OpCount::default())
}

/// Seed of participant `index` under `master_seed`.
pub fn participant_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, index as u64)
}

/// Exact serialised size of a shard.
pub fn shard_size(n_samples: usize, vec_len: usize) -> usize {
    SHARD_HEADER_LEN + n_samples * (4 * vec_len + 2)
}

/// Wire layout: `"PPCLSHD1"`, sample count u32 LE, vector length u32 LE,
/// scheme tag u8, 7 zero bytes; then per sample the values as f32 LE
/// followed by the label as u16 LE.
pub fn serialize_shard(samples: &[LabeledSample], tag: u8) -> Result<Vec<u8>> {
    let len = samples.first().map_or(0, |s| s.x.len());
    let mut out = Vec::with_capacity(shard_size(samples.len(), len));
    out.extend_from_slice(SHARD_MAGIC);
    out.extend_from_slice(&(samples.len() as u32).to_le_bytes());
    out.extend_from_slice(&(len as u32).to_le_bytes());
    out.push(tag);
    out.extend_from_slice(&[0u8; 7]);
    for s in samples {
        if s.x.len() != len {
            return Err(Error::Format(format!("heterogeneous shard: vector of length {} among length {len}", s.x.len())));
        }
        for &v in &s.x {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        let label = u16::try_from(s.y).map_err(|_| Error::Format(format!("label {} does not fit in u16", s.y)))?;
        out.extend_from_slice(&label.to_le_bytes());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    pub tag: u8,
    pub vec_len: usize,
    pub samples: Vec<LabeledSample>,
}

pub fn deserialize_shard(bytes: &[u8]) -> Result<Shard> {
    if bytes.len() < SHARD_HEADER_LEN || &bytes[..8] != SHARD_MAGIC {
        return Err(Error::Format("not a shard".into()));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let vec_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let tag = bytes[16];
    if bytes.len() != shard_size(n, vec_len) {
        return Err(Error::Format(format!("shard holds {} bytes, header implies {}", bytes.len(), shard_size(n, vec_len))));
    }
    let record = 4 * vec_len + 2;
    let samples = bytes[SHARD_HEADER_LEN..]
        .chunks_exact(record)
        .map(|rec| {
            let x = rec[..4 * vec_len].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
            let y = u16::from_le_bytes(rec[4 * vec_len..].try_into().unwrap()) as usize;
            LabeledSample { x, y }
        })
        .collect();
    Ok(Shard { tag, vec_len, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scheme(variant: Variant) -> ObfuscationScheme {
        ObfuscationScheme::new(variant, 17)
    }

    #[test]
    fn identity_passes_through() {
        let x = vec![0.5, -3.0, 7.25];
        assert_eq!(obfuscate_sample(scheme(Variant::Identity), (0.0, 1.0), &x).unwrap(), x);
    }

    #[test]
    fn laplace_moments() {
        let lambda = 2.0;
        let ob = Obfuscator::new(scheme(Variant::LaplaceDp { epsilon: 0.5, sensitivity: Some(1.0) }), 1, (0.0, 1.0)).unwrap();
        assert_eq!(ob.laplace_scale(), Some(lambda));
        let t = 100_000;
        let mut ops = OpCount::default();
        let draws: Vec<f64> = (0..t).map(|i| ob.apply(&[0.0], i, &mut ops).unwrap()[0]).collect();
        let mean = draws.iter().sum::<f64>() / t as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1) as f64;
        assert!(mean.abs() < 0.02 * lambda, "mean {mean}");
        assert!((var / (2.0 * lambda * lambda) - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn rr_zero_flip_is_identity() {
        let x: Vec<f64> = (0..=255).map(f64::from).collect();
        let s = scheme(Variant::RandomizedResponse { f: 0.0, bit_depth: 8 });
        assert_eq!(obfuscate_sample(s, (0.0, 255.0), &x).unwrap(), x);
        assert!(matches!(obfuscate_sample(s, (0.0, 255.0), &[256.0]), Err(Error::Quantization { .. })));
    }

    #[test]
    fn rr_full_flip_outputs_grid_values() {
        let s = scheme(Variant::RandomizedResponse { f: 1.0, bit_depth: 2 });
        let y = obfuscate_sample(s, (0.0, 3.0), &[0.0; 50]).unwrap();
        assert!(y.iter().all(|v| [0.0, 1.0, 2.0, 3.0].contains(v)));
        assert!(y.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn rr_epsilon_values() {
        assert_eq!(rr_epsilon(1.0).unwrap(), 0.0);
        assert!((rr_epsilon(0.5).unwrap() - 2.0 * 3f64.ln()).abs() < 1e-12);
        assert!((rr_epsilon(2.0 / 3.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(rr_epsilon(0.0).unwrap(), f64::INFINITY);
        assert!(rr_epsilon(1.5).is_err());
    }

    #[test]
    fn dp_variance_values() {
        assert_eq!(epsilon_for_variance(2.0, 1.0).unwrap(), 1.0);
        assert!((dp_variance(10.0, 255.0).unwrap() - 1300.5).abs() < 1e-9);
        let eps = 3.7;
        let back = epsilon_for_variance(dp_variance(eps, 42.0).unwrap(), 42.0).unwrap();
        assert!((back - eps).abs() <= 1e-12 * eps);
    }

    #[test]
    fn compression_ratio_validation() {
        assert_eq!(projected_dim(784, 1.0).unwrap(), 784);
        assert_eq!(projected_dim(784, 2.33).unwrap(), 336);
        assert!(matches!(projected_dim(784, 0.5), Err(Error::Config { field: "compression_ratio", .. })));
    }

    #[test]
    fn counted_projection_matches_reference() {
        let x: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        for kind in [MatrixKind::gaussian(), MatrixKind::Rademacher, MatrixKind::Binary { ones: 2 }] {
            let ob = Obfuscator::new(scheme(Variant::Projection { kind, compression_ratio: 2.0 }), 12, (0.0, 1.0)).unwrap();
            let reference = ob.matrix().unwrap().project(&x).unwrap();
            let y = ob.apply(&x, 0, &mut OpCount::default()).unwrap();
            for (a, b) in y.iter().zip(&reference) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{kind:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn op_counts() {
        let (k, d) = (6, 12);
        let samples = vec![LabeledSample::new(vec![1.0; d], 0); 3];
        let count = |kind| {
            let ob = Obfuscator::new(scheme(Variant::Projection { kind, compression_ratio: 2.0 }), d, (0.0, 1.0)).unwrap();
            ob.obfuscate_shard(&samples).unwrap().1
        };
        let g = count(MatrixKind::gaussian());
        assert_eq!((g.multiplications_per_sample(), g.additions_per_sample()), ((k * d) as f64, (k * (d - 1)) as f64));
        assert_eq!(g.paper_formula_muls, 3 * (k * d * d) as u64);
        let r = count(MatrixKind::Rademacher);
        assert_eq!((r.multiplications_per_sample(), r.additions_per_sample()), (k as f64, (k * (d - 1)) as f64));
        assert_eq!(paper_projection_cost(MatrixKind::Binary { ones: 3 }, k, d).additions, (3 * d - k) as u64);
    }

    #[test]
    fn shard_format() {
        let samples = vec![LabeledSample::new(vec![0.25; 784], 9)];
        let bytes = serialize_shard(&samples, 1).unwrap();
        assert_eq!(bytes.len(), 3162);
        assert_eq!(shard_size(1, 784), 3162);
        let back = deserialize_shard(&bytes).unwrap();
        assert_eq!((back.tag, back.vec_len), (1, 784));
        assert_eq!(back.samples, samples);

        let ragged = vec![LabeledSample::new(vec![0.0; 2], 0), LabeledSample::new(vec![0.0; 3], 0)];
        assert!(matches!(serialize_shard(&ragged, 0), Err(Error::Format(_))));
    }
}
