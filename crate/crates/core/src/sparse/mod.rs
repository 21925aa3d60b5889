//! Sparse matrices and the preconditioned Krylov solver used for every
//! linear system.

mod csr;
mod gmres;
mod ilu;

use thiserror::Error;

pub use csr::CsrMatrix;
pub use gmres::{gmres, GmresConfig, KrylovReport};
pub use ilu::{ilu0, ilu0_with_shift_retry, IluFactors};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("malformed sparse matrix: {0}")]
    Structure(String),
    #[error("row {row} has no stored diagonal entry")]
    MissingDiagonal { row: usize },
    #[error("zero pivot in ILU(0) factorization at row {row}")]
    ZeroPivot { row: usize },
}

/// Approximate inverse applied as `z = M^{-1} r`.
pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
