use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::SectorLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Two symmetry sectors whose ground energies coincide in real part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub field: Complex64,
    pub sectors: (SectorLabel, SectorLabel),
    pub energies: (Complex64, Complex64),
    pub gap: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    Validation(String),

    #[error("hilbert space of dimension {requested} exceeds capacity {capacity}")]
    Capacity { requested: u128, capacity: u128 },

    #[error("free-fermion path requires an even chain length, got {0}")]
    UnsupportedLength(usize),

    #[error("exceptional point at k = {k} (|eps_k| = {magnitude:e})")]
    ExceptionalPoint { k: f64, magnitude: f64 },

    #[error("eigensolver failed: {0}")]
    Solver(String),

    #[error("krylov solver did not converge after {restarts} restarts (best residual {residual:e})")]
    NoConvergence { restarts: usize, residual: f64 },

    #[error("krylov verification failed: energies {first} and {second} differ by {difference:e}")]
    Verification {
        first: Complex64,
        second: Complex64,
        difference: f64,
    },

    #[error("ground-state crossing at h = {}: sectors {:?} differ by {:e} in Re(E)", .0.field, .0.sectors, .0.gap)]
    Crossing(CrossingReport),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("no fidelity zeros found")]
    NoZeros,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::Config(_)
                | Error::UnsupportedLength(_)
                | Error::Capacity { .. }
                | Error::DimensionMismatch(..)
        )
    }
}
