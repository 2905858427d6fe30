//! Sparse CSR storage and a Jacobi-preconditioned conjugate-gradient solver.
//!
//! Vector kernels run on the current rayon pool. Reductions sum fixed-size
//! blocks and then combine the block sums in index order, so results do not
//! depend on how many workers execute them.

mod cg;
mod csr;

pub use cg::{cg_solve, pcg_solve, CgSettings, Jacobi, Preconditioner, SolveReport};
pub use csr::{spmv, CsrMatrix};

use rayon::prelude::*;

/// Rows (or vector entries) per parallel work item.
pub(crate) const ROW_CHUNK: usize = 2048;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix is not SPD: diagonal entry {value} at row {row}")]
    NotSpd { row: usize, value: f64 },
    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),
    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),
}

/// Deterministic blocked dot product.
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let partial: Vec<f64> = x
        .par_chunks(ROW_CHUNK)
        .zip(y.par_chunks(ROW_CHUNK))
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += a x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.par_chunks_mut(ROW_CHUNK)
        .zip(x.par_chunks(ROW_CHUNK))
        .for_each(|(ys, xs)| {
            for (yi, xi) in ys.iter_mut().zip(xs) {
                *yi += a * xi;
            }
        });
}

/// `p = z + beta p`
pub(crate) fn xpby(z: &[f64], beta: f64, p: &mut [f64]) {
    p.par_chunks_mut(ROW_CHUNK)
        .zip(z.par_chunks(ROW_CHUNK))
        .for_each(|(ps, zs)| {
            for (pi, zi) in ps.iter_mut().zip(zs) {
                *pi = zi + beta * *pi;
            }
        });
}
