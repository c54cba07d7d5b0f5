#![allow(dead_code)]

use ppcl::linalg::Matrix;

/// Singular values by one-sided Jacobi rotations on the columns of `a`,
/// sorted in decreasing order. Slow but independent of the library's
/// Cholesky and eigenvalue code.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    // Work on columns of Aᵀ when A is wide, so there are at most min(k, d) columns.
    let m = if a.rows() < a.cols() { a.transpose() } else { a.clone() };
    let (rows, cols) = (m.rows(), m.cols());
    let mut u: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| m.as_slice()[i * cols + j]).collect()).collect();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = u[p].iter().map(|v| v * v).sum();
                let beta: f64 = u[q].iter().map(|v| v * v).sum();
                let gamma: f64 = u[p].iter().zip(&u[q]).map(|(a, b)| a * b).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (u[p][i], u[q][i]);
                    u[p][i] = c * x - s * y;
                    u[q][i] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = u.iter().map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `‖A‖_F ‖A⁺‖_F` from singular values: `sqrt(Σσ²) · sqrt(Σ1/σ²)`.
pub fn frobenius_condition(sv: &[f64]) -> f64 {
    sv.iter().map(|s| s * s).sum::<f64>().sqrt() * sv.iter().map(|s| 1.0 / (s * s)).sum::<f64>().sqrt()
}

/// IDX image file written field by field from the published layout.
pub fn idx_images(n: usize, rows: usize, cols: usize, pixel: impl Fn(usize, usize, usize) -> u8) -> Vec<u8> {
    let mut out = vec![0, 0, 0x08, 0x03];
    for v in [n, rows, cols] {
        out.extend_from_slice(&(v as u32).to_be_bytes());
    }
    for i in 0..n {
        for r in 0..rows {
            for c in 0..cols {
                out.push(pixel(i, r, c));
            }
        }
    }
    out
}

pub fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = vec![0, 0, 0x08, 0x01];
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
