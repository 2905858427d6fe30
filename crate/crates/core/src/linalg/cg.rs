use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use super::{axpy, dot, norm2, xpby, CsrMatrix, LinalgError, ROW_CHUNK};

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CgSettings {
    /// Target relative residual `‖b - Ax‖ / ‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// True residual norm relative to `‖b‖` (absolute when `b = 0`).
    pub relative_residual: f64,
    pub converged: bool,
    /// Wall time in seconds.
    pub wall_time: f64,
}

pub trait Preconditioner: Sync {
    /// `z = M⁻¹ r`
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

/// Diagonal scaling.
#[derive(Debug, Clone)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    /// Fails on a non-positive diagonal entry, which rules out an SPD matrix.
    pub fn new(a: &CsrMatrix) -> Result<Self, LinalgError> {
        let diag = a.diagonal();
        if let Some((row, &value)) = diag
            .iter()
            .enumerate()
            .find(|(_, &d)| !(d > 0.0 && d.is_finite()))
        {
            return Err(LinalgError::NotSpd { row, value });
        }
        Ok(Self {
            inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
        })
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.par_chunks_mut(ROW_CHUNK)
            .zip(r.par_chunks(ROW_CHUNK))
            .zip(self.inv_diag.par_chunks(ROW_CHUNK))
            .for_each(|((zs, rs), ds)| {
                for ((zi, ri), di) in zs.iter_mut().zip(rs).zip(ds) {
                    *zi = ri * di;
                }
            });
    }
}

/// Jacobi-preconditioned conjugate gradients.
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport), LinalgError> {
    let jacobi = Jacobi::new(a)?;
    pcg_solve(a, b, x0, tol, max_iter, &jacobi)
}

/// Preconditioned conjugate gradients for an SPD matrix.
///
/// Convergence is judged on the unpreconditioned residual. When the
/// recursively updated residual meets the tolerance the true residual is
/// recomputed; if it does not agree, iteration resumes from the true residual.
pub fn pcg_solve<P: Preconditioner>(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
    precond: &P,
) -> Result<(Vec<f64>, SolveReport), LinalgError> {
    let start = Instant::now();
    let n = a.dim();
    for len in [b.len(), x0.len()] {
        if len != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    if !(tol > 0.0) {
        return Err(LinalgError::InvalidSettings(format!(
            "tolerance must be positive, got {tol}"
        )));
    }

    let b_norm = norm2(b);
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };

    let mut x = x0.to_vec();
    let mut r = true_residual(a, b, &x)?;
    let mut res = norm2(&r) / scale;
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut restart = true;
    let mut rz = 0.0;

    while res > tol && iterations < max_iter {
        if restart {
            precond.apply(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            restart = false;
        }
        a.spmv_into(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // Breakdown: the search direction has no energy left.
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        iterations += 1;

        res = norm2(&r) / scale;
        if res <= tol {
            r = true_residual(a, b, &x)?;
            res = norm2(&r) / scale;
            if res > tol {
                restart = true;
            }
            continue;
        }

        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        xpby(&z, rz_new / rz, &mut p);
        rz = rz_new;
    }

    let r = true_residual(a, b, &x)?;
    let relative_residual = norm2(&r) / scale;
    let report = SolveReport {
        iterations,
        relative_residual,
        converged: relative_residual <= tol,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((x, report))
}

fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let mut r = vec![0.0; b.len()];
    a.spmv_into(x, &mut r)?;
    r.par_chunks_mut(ROW_CHUNK)
        .zip(b.par_chunks(ROW_CHUNK))
        .for_each(|(rs, bs)| {
            for (ri, bi) in rs.iter_mut().zip(bs) {
                *ri = bi - *ri;
            }
        });
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_one_iteration() {
        let b = vec![3.0, -1.0, 2.5, 7.0];
        let (x, rep) = cg_solve(&CsrMatrix::identity(4), &b, &[0.0; 4], 1e-12, 10).unwrap();
        assert_eq!(x, b);
        assert!(rep.iterations <= 1);
        assert!(rep.converged);
    }

    #[test]
    fn two_by_two_exact() {
        let a = CsrMatrix::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let (x, rep) = cg_solve(&a, &[1.0, 2.0], &[0.0, 0.0], 1e-14, 10).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-10);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-10);
        assert!(rep.converged);
    }

    #[test]
    fn zero_rhs_zero_iterations() {
        let a = CsrMatrix::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let (x, rep) = cg_solve(&a, &[0.0, 0.0], &[0.0, 0.0], 1e-10, 10).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged);
        assert_eq!(rep.relative_residual, 0.0);
    }

    #[test]
    fn non_positive_diagonal_is_rejected() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, -2.0]]).unwrap();
        let err = cg_solve(&a, &[1.0, 1.0], &[0.0, 0.0], 1e-8, 10).unwrap_err();
        assert_eq!(
            err,
            LinalgError::NotSpd {
                row: 1,
                value: -2.0
            }
        );
    }

    #[test]
    fn reports_non_convergence() {
        // 1D Laplacian needs n iterations; cap below that.
        let n = 20;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, &t).unwrap();
        let (_, rep) = cg_solve(&a, &vec![1.0; n], &vec![0.0; n], 1e-12, 3).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let a = CsrMatrix::identity(2);
        assert!(cg_solve(&a, &[1.0, 1.0], &[0.0, 0.0], 0.0, 10).is_err());
    }
}
