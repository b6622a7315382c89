//! Dense symmetric linear algebra: cyclic Jacobi eigendecomposition, the
//! positive-semidefinite square root, and certified spectral-norm bounds.
//! Matrices are row-major `Vec<Vec<f64>>`; sizes stay small (graph order).

use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix, ascending by eigenvalue.
/// `eigenvectors[k]` is the unit eigenvector for `eigenvalues[k]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

pub fn mat_transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut out = vec![vec![0.0; rows]; cols];
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[j][i] = v;
        }
    }
    out
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = a.len();
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    let mut out = vec![vec![0.0; cols]; rows];
    for (i, row) in a.iter().enumerate() {
        for (k, &aik) in row.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (j, &bkj) in b[k].iter().enumerate() {
                out[i][j] += aik * bkj;
            }
        }
    }
    out
}

fn off_diagonal_norm(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut sum = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            sum += a[p][q] * a[p][q];
        }
    }
    (2.0 * sum).sqrt()
}

/// Cyclic Jacobi iteration. The input is read as symmetric (only the upper
/// triangle drives the rotations).
pub fn jacobi_eigen(matrix: &[Vec<f64>], max_sweeps: usize) -> Result<SymmetricEigen> {
    let n = matrix.len();
    if n == 0 {
        return Ok(SymmetricEigen {
            eigenvalues: Vec::new(),
            eigenvectors: Vec::new(),
        });
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a
        .iter()
        .flat_map(|row| row.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(1.0);
    let tol = 1e-14 * scale;
    let mut converged = false;
    for _ in 0..max_sweeps {
        if off_diagonal_norm(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p][j];
                    let aqj = a[q][j];
                    a[p][j] = c * apj - s * aqj;
                    a[q][j] = s * apj + c * aqj;
                }
                for row in v.iter_mut() {
                    let vip = row[p];
                    let viq = row[q];
                    row[p] = c * vip - s * viq;
                    row[q] = s * vip + c * viq;
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > tol {
        return Err(Error::EigenNonConvergence { sweeps: max_sweeps });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap().then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&k| a[k][k]).collect();
    let eigenvectors = order
        .iter()
        .map(|&k| v.iter().map(|row| row[k]).collect())
        .collect();
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Positive-semidefinite square root of a symmetric matrix. Eigenvalues
/// below zero or within relative noise of zero are clamped before the root
/// is taken; the square root would otherwise amplify an eigenvalue error
/// of 1e-16 into matrix entries of 1e-8.
pub fn symmetric_sqrt(matrix: &[Vec<f64>], max_sweeps: usize) -> Result<Vec<Vec<f64>>> {
    let n = matrix.len();
    let eigen = jacobi_eigen(matrix, max_sweeps)?;
    let largest = eigen
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let floor = largest * 1e-12;
    let roots: Vec<f64> = eigen
        .eigenvalues
        .iter()
        .map(|&l| if l <= floor { 0.0 } else { l.sqrt() })
        .collect();
    let mut out = vec![vec![0.0; n]; n];
    for (k, vec_k) in eigen.eigenvectors.iter().enumerate() {
        let r = roots[k];
        if r == 0.0 {
            continue;
        }
        for i in 0..n {
            let vi = vec_k[i] * r;
            if vi == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += vi * vec_k[j];
            }
        }
    }
    Ok(out)
}

/// Certified upper bound on the spectral norm: the smaller of the
/// Frobenius norm and the max absolute row sum (which equals the operator
/// 1-norm bound for symmetric input).
pub fn spectral_norm_bound(matrix: &[Vec<f64>]) -> f64 {
    let frobenius = matrix
        .iter()
        .flat_map(|row| row.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    let row_sum = matrix
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum())
        .fold(0.0, f64::max);
    frobenius.min(row_sum)
}

/// Power-iteration estimate of the spectral norm of a symmetric matrix.
/// A lower bound on the true norm; pair with [`spectral_norm_bound`] when
/// a certificate is needed.
pub fn spectral_norm_estimate(matrix: &[Vec<f64>], iterations: usize) -> f64 {
    let n = matrix.len();
    if n == 0 {
        return 0.0;
    }
    // Deterministic start with unequal entries so no eigenvector of a
    // structured matrix is hit orthogonally.
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) / (n as f64)).collect();
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let mut y = vec![0.0; n];
        for (i, row) in matrix.iter().enumerate() {
            y[i] = row.iter().zip(&x).map(|(a, b)| a * b).sum();
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        estimate = norm / x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y;
        let rescale = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut x {
            *v /= rescale;
        }
    }
    estimate
}
