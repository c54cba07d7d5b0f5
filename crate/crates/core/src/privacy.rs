//! Empirical checks of the projection properties, reconstruction attacks
//! and the inter-class overlap rate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::randmat::{MatrixKind, ProjectionMatrix};
use crate::rng::{derive_seed, Prng};

/// Predicted per-element variance of the projection estimate of `x`:
/// `(2/k) x_i² + (1/k) Σ_{j≠i} x_j²`.
pub fn predicted_variance(x: &[f64], k: usize) -> Vec<f64> {
    let total: f64 = x.iter().map(|v| v * v).sum();
    let k = k as f64;
    x.iter().map(|v| (2.0 * v * v + (total - v * v)) / k).collect()
}

/// Dataset-average of [`predicted_variance`] over all samples and elements.
pub fn mean_predicted_variance<'a>(vectors: impl IntoIterator<Item = &'a [f64]>, k: usize) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for x in vectors {
        let d = x.len() as f64;
        let sq: f64 = x.iter().map(|v| v * v).sum();
        sum += (sq + sq / d) / k as f64 * d;
        count += x.len();
    }
    sum / count.max(1) as f64
}

/// Minimum-norm solution `x̂ = R⁺ (y / scale)` of `R x̂ = y / scale`, where
/// `scale` is the matrix's output scale (`1/(√k σ)` for Gaussian matrices).
pub fn min_norm_reconstruct(r: &ProjectionMatrix, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != r.rows() {
        return Err(Error::Dimension { expected: r.rows(), got: y.len() });
    }
    let s = r.output_scale();
    let unscaled: Vec<f64> = y.iter().map(|v| v / s).collect();
    r.pseudoinverse()?.mat_vec(&unscaled)
}

/// Adjoint estimate `x̂ = Rᵀ y / (√k σ)` for Gaussian matrices (`Rᵀ y` for
/// Rademacher). Unbiased because `E[RᵀR] = k σ² I`; its per-element variance
/// is [`predicted_variance`].
pub fn adjoint_estimate(r: &ProjectionMatrix, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != r.rows() {
        return Err(Error::Dimension { expected: r.rows(), got: y.len() });
    }
    let factor = match r.kind() {
        MatrixKind::Gaussian { sigma } => 1.0 / ((r.rows() as f64).sqrt() * sigma),
        MatrixKind::Rademacher => 1.0,
        other => return Err(Error::config("kind", format!("no unbiased adjoint estimate for {other:?}"))),
    };
    let e = r.entries();
    let mut x = vec![0.0; r.cols()];
    for (i, &yi) in y.iter().enumerate() {
        for (xj, &rij) in x.iter_mut().zip(e.row(i)) {
            *xj += rij * yi;
        }
    }
    x.iter_mut().for_each(|v| *v *= factor);
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    MinNorm,
    Adjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub estimator: Estimator,
    pub trials: usize,
    /// Mean estimate over all trials.
    pub x_hat: Vec<f64>,
    pub per_element_bias: Vec<f64>,
    pub per_element_empirical_var: Vec<f64>,
    pub per_element_predicted_var: Vec<f64>,
    /// Four standard errors of the mean estimate, per element.
    pub bias_band: Vec<f64>,
}

impl ReconstructionReport {
    /// Largest `|empirical / predicted − 1|` over elements.
    pub fn max_variance_deviation(&self) -> f64 {
        self.per_element_empirical_var
            .iter()
            .zip(&self.per_element_predicted_var)
            .map(|(e, p)| (e / p - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn bias_within_band(&self) -> bool {
        self.per_element_bias.iter().zip(&self.bias_band).all(|(b, band)| b.abs() <= *band)
    }

    /// Largest `|bias| / band`.
    pub fn max_bias_in_bands(&self) -> f64 {
        self.per_element_bias.iter().zip(&self.bias_band).map(|(b, band)| b.abs() / band).fold(0.0, f64::max)
    }
}

/// Monte Carlo reconstruction of a fixed `x` from its projection under
/// `n_matrices` independent `k × d` Gaussian matrices (σ = 1).
pub fn verify_property2(x: &[f64], k: usize, n_matrices: usize, seed: u64, estimator: Estimator) -> Result<ReconstructionReport> {
    let d = x.len();
    if n_matrices < 2 {
        return Err(Error::config("n_matrices", "at least two trials are needed"));
    }
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    for t in 0..n_matrices {
        let r = ProjectionMatrix::generate(MatrixKind::gaussian(), k, d, derive_seed(seed, t as u64))?;
        let y = r.project(x)?;
        let x_hat = match estimator {
            Estimator::MinNorm => min_norm_reconstruct(&r, &y)?,
            Estimator::Adjoint => adjoint_estimate(&r, &y)?,
        };
        for j in 0..d {
            let dev = x_hat[j] - x[j];
            sum[j] += dev;
            sum_sq[j] += dev * dev;
        }
    }
    let n = n_matrices as f64;
    let bias: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let var: Vec<f64> = sum_sq.iter().zip(&bias).map(|(sq, b)| (sq - n * b * b) / (n - 1.0)).collect();
    Ok(ReconstructionReport {
        estimator,
        trials: n_matrices,
        x_hat: x.iter().zip(&bias).map(|(v, b)| v + b).collect(),
        bias_band: var.iter().map(|v| 4.0 * (v / n).sqrt()).collect(),
        per_element_bias: bias,
        per_element_empirical_var: var,
        per_element_predicted_var: predicted_variance(x, k),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Property1Report {
    pub k: usize,
    pub n_pairs: usize,
    pub n_matrices: usize,
    pub max_abs_bias_dot: f64,
    pub max_abs_bias_dist: f64,
    pub max_var_dot: f64,
    pub max_var_dist: f64,
    /// `2/k`
    pub bound_var_dot: f64,
    /// `32/k`
    pub bound_var_dist: f64,
}

impl Property1Report {
    pub fn passes(&self, bias_tol: f64, slack: f64) -> bool {
        self.max_abs_bias_dot < bias_tol
            && self.max_var_dot <= self.bound_var_dot * (1.0 + slack)
            && self.max_var_dist <= self.bound_var_dist * (1.0 + slack)
    }
}

/// Unit-norm test pairs: pair 0 is `(x, x)`, pair 1 is orthogonal, the rest
/// are independent random directions.
pub fn unit_pairs(d: usize, n_pairs: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = Prng::new(seed);
    let mut unit = || {
        let v: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
        let n = norm2(&v);
        v.into_iter().map(|x| x / n).collect::<Vec<f64>>()
    };
    (0..n_pairs)
        .map(|p| {
            let a = unit();
            let b = match p {
                0 => a.clone(),
                1 => {
                    let c = unit();
                    let proj = dot(&a, &c);
                    let o: Vec<f64> = c.iter().zip(&a).map(|(ci, ai)| ci - proj * ai).collect();
                    let n = norm2(&o);
                    o.into_iter().map(|x| x / n).collect()
                }
                _ => unit(),
            };
            (a, b)
        })
        .collect()
}

/// Inner products and squared distances of projected unit-norm pairs over
/// `n_matrices` Gaussian `k × d` draws, compared with the originals.
pub fn verify_property1(d: usize, k: usize, n_pairs: usize, n_matrices: usize, seed: u64) -> Result<Property1Report> {
    if n_matrices < 2 || n_pairs == 0 {
        return Err(Error::config("n_matrices", "need at least one pair and two matrices"));
    }
    let pairs = unit_pairs(d, n_pairs, derive_seed(seed, u64::MAX));
    let truth: Vec<(f64, f64)> = pairs
        .iter()
        .map(|(a, b)| (dot(a, b), a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum()))
        .collect();
    let mut acc = vec![[0.0f64; 4]; n_pairs];
    for m in 0..n_matrices {
        let r = ProjectionMatrix::generate(MatrixKind::gaussian(), k, d, derive_seed(seed, m as u64))?;
        for (p, (a, b)) in pairs.iter().enumerate() {
            let ya = r.project(a)?;
            let yb = r.project(b)?;
            let e_dot = dot(&ya, &yb) - truth[p].0;
            let e_dist = ya.iter().zip(&yb).map(|(u, v)| (u - v).powi(2)).sum::<f64>() - truth[p].1;
            acc[p][0] += e_dot;
            acc[p][1] += e_dot * e_dot;
            acc[p][2] += e_dist;
            acc[p][3] += e_dist * e_dist;
        }
    }
    let n = n_matrices as f64;
    let stats = |s: f64, sq: f64| {
        let mean = s / n;
        (mean, (sq - n * mean * mean) / (n - 1.0))
    };
    let mut report = Property1Report {
        k,
        n_pairs,
        n_matrices,
        max_abs_bias_dot: 0.0,
        max_abs_bias_dist: 0.0,
        max_var_dot: 0.0,
        max_var_dist: 0.0,
        bound_var_dot: 2.0 / k as f64,
        bound_var_dist: 32.0 / k as f64,
    };
    for a in &acc {
        let (bias_dot, var_dot) = stats(a[0], a[1]);
        let (bias_dist, var_dist) = stats(a[2], a[3]);
        report.max_abs_bias_dot = report.max_abs_bias_dot.max(bias_dot.abs());
        report.max_abs_bias_dist = report.max_abs_bias_dist.max(bias_dist.abs());
        report.max_var_dot = report.max_var_dot.max(var_dot);
        report.max_var_dist = report.max_var_dist.max(var_dist);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapParams {
    pub radius: f64,
    /// Different-class neighbours needed within `radius`.
    pub n_min: usize,
}

impl Default for OverlapParams {
    fn default() -> Self {
        Self { radius: 0.01, n_min: 3 }
    }
}

/// Fraction of points with at least `n_min` points of another class within
/// Euclidean distance `radius` (inclusive). Brute force, O(n²).
pub fn overlap_rate(points: &[Vec<f64>], labels: &[usize], params: OverlapParams) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::Dimension { expected: points.len(), got: labels.len() });
    }
    if !(params.radius > 0.0) || params.n_min == 0 {
        return Err(Error::config("radius", "radius must be positive and n_min at least 1"));
    }
    if points.is_empty() {
        return Ok(0.0);
    }
    let d = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::Dimension { expected: d, got: p.len() });
    }
    let r2 = params.radius * params.radius;
    let overlapped = points
        .iter()
        .zip(labels)
        .filter(|(p, &lp)| {
            let mut hits = 0;
            for (q, &lq) in points.iter().zip(labels) {
                if lq != lp && sq_dist(p, q) <= r2 {
                    hits += 1;
                    if hits >= params.n_min {
                        return true;
                    }
                }
            }
            false
        })
        .count();
    Ok(overlapped as f64 / points.len() as f64)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// All `|A|·|B|` pairwise Euclidean distances, sorted ascending.
pub fn distance_cdf(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().flat_map(|p| b.iter().map(move |q| sq_dist(p, q).sqrt())).collect();
    out.sort_by(f64::total_cmp);
    out
}
