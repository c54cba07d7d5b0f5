//! Random projection matrices: generation, projection, pseudoinverse and
//! condition numbers.
//!
//! Entries are stored unscaled. A Gaussian matrix with standard deviation σ is
//! applied as `y = R x / (√k σ)`, which makes inner products and squared
//! distances unbiased; Rademacher entries already carry their `±1/√k`
//! normalisation and binary matrices are applied as-is.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{extreme_eigenvalues, orthogonal_factor, Cholesky, Matrix};
use crate::rng::Prng;

/// Relative pivot threshold (against the Gram trace) below which a matrix is
/// treated as rank deficient.
pub const RANK_TOL: f64 = 1e-12;

const MATRIX_MAGIC: &[u8; 8] = b"PPCLMAT1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MatrixKind {
    /// i.i.d. `N(0, σ²)` entries.
    Gaussian { sigma: f64 },
    /// `±1/√k` with equal probability.
    Rademacher,
    /// Each column holds exactly `ones` ones at uniformly chosen rows.
    Binary { ones: usize },
    /// Square `Q₁ diag(s) Q₂ᵀ` with a prescribed 2-norm condition number.
    Conditioned { kappa: f64 },
}

impl MatrixKind {
    pub const fn gaussian() -> Self {
        MatrixKind::Gaussian { sigma: 1.0 }
    }

    fn tag(&self) -> u8 {
        match self {
            MatrixKind::Gaussian { .. } => 0,
            MatrixKind::Rademacher => 1,
            MatrixKind::Binary { .. } => 2,
            MatrixKind::Conditioned { .. } => 3,
        }
    }

    fn param(&self) -> f64 {
        match *self {
            MatrixKind::Gaussian { sigma } => sigma,
            MatrixKind::Rademacher => 0.0,
            MatrixKind::Binary { ones } => ones as f64,
            MatrixKind::Conditioned { kappa } => kappa,
        }
    }

    fn from_tag(tag: u8, param: f64) -> Result<Self> {
        Ok(match tag {
            0 => MatrixKind::Gaussian { sigma: param },
            1 => MatrixKind::Rademacher,
            2 => MatrixKind::Binary { ones: param as usize },
            3 => MatrixKind::Conditioned { kappa: param },
            other => return Err(Error::Format(format!("unknown matrix kind byte {other}"))),
        })
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            MatrixKind::Gaussian { .. } => "grp",
            MatrixKind::Rademacher => "rrp",
            MatrixKind::Binary { .. } => "brp",
            MatrixKind::Conditioned { .. } => "conditioned",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    kind: MatrixKind,
    seed: u64,
    entries: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// `‖R‖_F · ‖R⁺‖_F`
    pub frobenius_cond: f64,
    /// `σ_max / σ_min`
    pub two_norm_cond: f64,
}

impl ProjectionMatrix {
    /// Draws a `k × d` matrix of the given kind.
    pub fn generate(kind: MatrixKind, k: usize, d: usize, seed: u64) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::config("k", "matrix dimensions must be positive"));
        }
        if k > d {
            return Err(Error::config("k", format!("projection dimension {k} exceeds input dimension {d}")));
        }
        let mut rng = Prng::new(seed);
        let entries = match kind {
            MatrixKind::Gaussian { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::config("sigma", format!("must be positive, got {sigma}")));
                }
                let data = (0..k * d).map(|_| sigma * rng.gaussian()).collect();
                Matrix::from_vec(k, d, data)?
            }
            MatrixKind::Rademacher => {
                let a = 1.0 / (k as f64).sqrt();
                let data = (0..k * d).map(|_| if rng.bernoulli(0.5) { a } else { -a }).collect();
                Matrix::from_vec(k, d, data)?
            }
            MatrixKind::Binary { ones } => {
                if ones == 0 || ones > k {
                    return Err(Error::config("ones", format!("need 1 <= S <= k, got S={ones}, k={k}")));
                }
                let mut m = Matrix::zeros(k, d);
                for j in 0..d {
                    for i in rng.choose_distinct(k, ones) {
                        m[(i, j)] = 1.0;
                    }
                }
                m
            }
            MatrixKind::Conditioned { kappa } => {
                if k != d {
                    return Err(Error::config("k", "conditioned matrices are square"));
                }
                return Self::conditioned(d, kappa, seed);
            }
        };
        Ok(Self { kind, seed, entries })
    }

    /// Square matrix `Q₁ diag(s) Q₂ᵀ` whose singular values are geometrically
    /// spaced from 1 down to `1/kappa`, so the 2-norm condition number is `kappa`.
    pub fn conditioned(d: usize, kappa: f64, seed: u64) -> Result<Self> {
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(Error::config("kappa", format!("must be a finite value >= 1, got {kappa}")));
        }
        if d == 0 {
            return Err(Error::config("d", "must be positive"));
        }
        if d == 1 && kappa != 1.0 {
            return Err(Error::config("kappa", "a 1x1 matrix always has condition number 1"));
        }
        let mut rng = Prng::new(seed);
        let mut draw = || {
            let data = (0..d * d).map(|_| rng.gaussian()).collect();
            orthogonal_factor(&Matrix::from_vec(d, d, data).expect("square"))
        };
        let q1 = draw();
        let q2 = draw();
        let singular: Vec<f64> = (0..d)
            .map(|i| if d == 1 { 1.0 } else { kappa.powf(-(i as f64) / (d - 1) as f64) })
            .collect();
        let entries = q1.matmul(&Matrix::diag(&singular))?.matmul(&q2.transpose())?;
        Ok(Self { kind: MatrixKind::Conditioned { kappa }, seed, entries })
    }

    /// Wraps explicit entries, e.g. for hand-built test cases.
    pub fn from_entries(kind: MatrixKind, seed: u64, entries: Matrix) -> Result<Self> {
        if entries.rows() > entries.cols() {
            return Err(Error::config("k", "projection dimension exceeds input dimension"));
        }
        Ok(Self { kind, seed, entries })
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Output dimension k.
    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    /// Input dimension d.
    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    /// Factor applied after `R x`: `1/(√k σ)` for Gaussian matrices, 1 otherwise.
    pub fn output_scale(&self) -> f64 {
        match self.kind {
            MatrixKind::Gaussian { sigma } => 1.0 / ((self.rows() as f64).sqrt() * sigma),
            _ => 1.0,
        }
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.entries.mat_vec(x)?;
        let s = self.output_scale();
        if s != 1.0 {
            y.iter_mut().for_each(|v| *v *= s);
        }
        Ok(y)
    }

    /// Moore–Penrose pseudoinverse `Rᵀ (R Rᵀ)⁻¹` of the raw entries (d × k).
    pub fn pseudoinverse(&self) -> Result<Matrix> {
        let gram = self.entries.gram();
        let chol = Cholesky::new(&gram, RANK_TOL)?;
        self.entries.transpose().matmul(&chol.inverse())
    }

    pub fn frobenius_condition(&self) -> Result<f64> {
        Ok(self.entries.frobenius_norm() * self.pseudoinverse()?.frobenius_norm())
    }

    pub fn condition_number(&self) -> Result<ConditionReport> {
        let gram = self.entries.gram();
        let chol = Cholesky::new(&gram, RANK_TOL)?;
        let pinv = self.entries.transpose().matmul(&chol.inverse())?;
        let (lambda_max, lambda_min) = extreme_eigenvalues(&gram, &chol);
        Ok(ConditionReport {
            frobenius_cond: self.entries.frobenius_norm() * pinv.frobenius_norm(),
            two_norm_cond: (lambda_max / lambda_min).sqrt(),
        })
    }

    /// Size in bytes of the serialised form.
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + 8 * self.rows() * self.cols()
    }

    /// Binary layout: `"PPCLMAT1"`, kind byte, k and d as u32 LE, then the
    /// kind parameter (σ, S or κ) as f64 LE and the seed as u64 LE, then the
    /// k·d entries as f64 LE in row-major order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MATRIX_MAGIC)?;
        w.write_all(&[self.kind.tag()])?;
        w.write_all(&(self.rows() as u32).to_le_bytes())?;
        w.write_all(&(self.cols() as u32).to_le_bytes())?;
        w.write_all(&self.kind.param().to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for v in self.entries.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header).map_err(|_| Error::Format("truncated matrix header".into()))?;
        if &header[..8] != MATRIX_MAGIC {
            return Err(Error::Format("bad matrix magic".into()));
        }
        let tag = header[8];
        let k = u32::from_le_bytes(header[9..13].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(header[13..17].try_into().unwrap()) as usize;
        let param = f64::from_le_bytes(header[17..25].try_into().unwrap());
        let seed = u64::from_le_bytes(header[25..33].try_into().unwrap());
        let kind = MatrixKind::from_tag(tag, param)?;
        let mut raw = vec![0u8; 8 * k * d];
        r.read_exact(&mut raw).map_err(|_| Error::Format("truncated matrix body".into()))?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Self::from_entries(kind, seed, Matrix::from_vec(k, d, data)?)
    }
}

const HEADER_LEN: usize = 8 + 1 + 4 + 4 + 8 + 8;

/// Frobenius condition numbers of `n_draws` independent matrices. Draw `i`
/// uses seed `seed + i`; rank-deficient draws are reported as `+∞`.
pub fn condition_histogram(kind: MatrixKind, k: usize, d: usize, n_draws: usize, seed: u64) -> Result<Vec<f64>> {
    (0..n_draws as u64)
        .map(|i| {
            let m = ProjectionMatrix::generate(kind, k, d, seed.wrapping_add(i))?;
            match m.frobenius_condition() {
                Ok(c) => Ok(c),
                Err(Error::Singular { .. }) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Order statistics of a condition-number sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionSummary {
    pub draws: usize,
    pub singular: usize,
    pub median: f64,
    pub max_finite: f64,
    pub max: f64,
    /// Fraction of all draws with condition number above 10⁴ (∞ included).
    pub frac_above_1e4: f64,
    /// Fraction of all draws inside [10⁴, 10⁵].
    pub frac_1e4_to_1e5: f64,
}

pub fn summarize_conditions(values: &[f64]) -> ConditionSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let frac = |pred: &dyn Fn(f64) -> bool| values.iter().filter(|&&v| pred(v)).count() as f64 / n.max(1) as f64;
    ConditionSummary {
        draws: n,
        singular: values.iter().filter(|v| v.is_infinite()).count(),
        median,
        max_finite: values.iter().copied().filter(|v| v.is_finite()).fold(f64::NAN, f64::max),
        max: sorted.last().copied().unwrap_or(f64::NAN),
        frac_above_1e4: frac(&|v| v > 1e4),
        frac_1e4_to_1e5: frac(&|v| (1e4..=1e5).contains(&v)),
    }
}
