//! Ground states of non-Hermitian chains by exact diagonalisation.
//!
//! "Ground state" always means the eigenvalue of smallest real part; the
//! imaginary part only breaks ties in the ordering. Small sector blocks are
//! diagonalised densely, larger ones with restarted Arnoldi.

mod dense;
mod ground;
mod krylov;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dense::{dense_eig, spectral_order, DEFAULT_DENSE_CAP};
pub use ground::{
    global_ground, sector_ground, spec_hash, EdSolver, GroundStateResult, Method, SolverConfig,
    SolverDiagnostics,
};
pub use krylov::{krylov_ground, KrylovConfig, KrylovDiagnostics};

/// A right eigenpair with its residual `‖Av − Ev‖₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub energy: Complex64,
    /// Unit Euclidean norm.
    pub vector: Vec<Complex64>,
    pub residual: f64,
}

pub(crate) fn residual_norm(av: &[Complex64], v: &[Complex64], energy: Complex64) -> f64 {
    av.iter()
        .zip(v)
        .map(|(a, x)| (a - energy * x).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Dirac inner product `⟨v1|v2⟩`, conjugate-linear in `v1`.
pub fn overlap(v1: &[Complex64], v2: &[Complex64]) -> Result<Complex64> {
    if v1.len() != v2.len() {
        return Err(Error::DimensionMismatch(v1.len(), v2.len()));
    }
    Ok(v1.iter().zip(v2).map(|(a, b)| a.conj() * b).sum())
}
