//! One-sided (Hestenes) Jacobi singular value decomposition.
//!
//! Columns of a working copy are rotated pairwise until mutually orthogonal;
//! the column norms are then the singular values. The method is scale
//! invariant and computes each singular value to high accuracy relative to
//! the largest one, which is what the flag dynamics need.

use super::matrix::{norm, orthonormalize, Matrix};
use crate::error::{Error, Result};

pub const DEFAULT_SVD_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_SWEEPS: usize = 60;

/// Thin SVD `a = u · diag(sigma) · vᵀ` of an m×n matrix with m >= n.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

/// Full decomposition of an m×n matrix with `m >= n`. Singular values are
/// sorted nonincreasing; zero singular values receive completed orthonormal
/// left vectors.
pub fn svd(a: &Matrix, tol: f64, max_sweeps: usize) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        let t = svd(&a.transpose(), tol, max_sweeps)?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    // column-major working copy
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut residual = f64::INFINITY;
    let mut converged = n < 2;
    for _ in 0..max_sweeps {
        residual = 0.0f64;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let np = norm(&w[p]);
                let nq = norm(&w[q]);
                if np == 0.0 || nq == 0.0 {
                    continue;
                }
                // normalized inner products keep huge entries from overflowing
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    let x = w[p][i] / np;
                    let y = w[q][i] / nq;
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                let ratio = gamma.abs() / (alpha * beta).sqrt();
                residual = residual.max(ratio);
                if ratio <= f64::EPSILON {
                    continue;
                }
                rotated = true;
                // rotation angle of the unnormalized pair, divided through by np·nq
                let zeta = (beta * (nq / np) - alpha * (np / nq)) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[p][i], w[q][i]);
                    w[p][i] = c * x - s * y;
                    w[q][i] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[p][i], v[q][i]);
                    v[p][i] = c * x - s * y;
                    v[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated || residual <= tol * 1e-3 {
            converged = true;
            break;
        }
    }
    if !converged && residual > tol {
        return Err(Error::ConvergenceFailure {
            sweeps: max_sweeps,
            residual,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = w.iter().map(|c| norm(c)).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    let mut left: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > smax * 1e-300 && norms[j] > 0.0 {
            left.push(w[j].iter().map(|x| x / norms[j]).collect());
        } else {
            left.push(vec![0.0; m]);
            missing.push(k);
        }
    }
    if !missing.is_empty() {
        let good: Vec<Vec<f64>> = left
            .iter()
            .enumerate()
            .filter(|(k, _)| !missing.contains(k))
            .map(|(_, c)| c.clone())
            .collect();
        let filled = orthonormalize(vec![vec![0.0; m]; missing.len()], &good);
        for (k, col) in missing.iter().zip(filled) {
            left[*k] = col;
        }
    }
    let right: Vec<Vec<f64>> = order.iter().map(|&j| v[j].clone()).collect();
    Ok(Svd {
        u: Matrix::from_columns(&left),
        sigma,
        v: Matrix::from_columns(&right),
    })
}

/// Singular values only, nonincreasing.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(Vec::new());
    }
    Ok(svd(a, DEFAULT_SVD_TOLERANCE, DEFAULT_MAX_SWEEPS)?.sigma)
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(a: &Matrix) -> f64 {
    singular_values(a)
        .ok()
        .and_then(|s| s.first().copied())
        .unwrap_or_else(|| a.norm_frobenius())
}

/// Smallest singular value of an m×n matrix (the n-th when m >= n).
pub fn smallest_singular_value(a: &Matrix) -> f64 {
    singular_values(a)
        .ok()
        .and_then(|s| s.last().copied())
        .unwrap_or(0.0)
}
