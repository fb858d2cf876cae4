//! Fidelity-zero scans in the complex field plane.
//!
//! Ground states of different symmetry sectors are exactly orthogonal, so the
//! fidelity between neighbouring ground states vanishes wherever the lowest
//! `Re(E)` sector changes. Zeros are therefore located as sign changes of
//! `Re(E_a) − Re(E_b)` between the two competing sectors and refined on that
//! function rather than by thresholding small fidelities.

mod circle;
mod edge;
mod fold;
mod plane;
pub mod roots;
mod solver;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::SectorLabel;

pub use circle::{default_n_theta, detect_circle_zeros, scan_circle, CircleSample, CircleScan, FidelityMode};
pub use edge::{edge_report, EdgeReport, DEFAULT_EDGE_THRESHOLD};
pub use fold::{refine_fold, refine_hl, FoldMethod, FoldPoint};
pub use plane::{detect_path_zeros, extract_hl, scan_grid, scan_line, GridSpec, LineSummary, PlaneScan};
pub use solver::{
    solver_for, state_fidelity, Backend, EdGroundSolver, FreeFermionSolver, GroundSolver, SectorPair,
    SectorState, StateData,
};

/// Tuning shared by all scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanOptions {
    /// Target `|Re(E_a) − Re(E_b)|` at a refined zero.
    pub root_tolerance: f64,
    pub max_root_iterations: usize,
    /// Abort when more than this fraction of samples fails to solve.
    pub max_flagged_fraction: f64,
    /// Levels of four-way resampling of circle intervals that may hide a
    /// pair of zeros; 0 disables it.
    pub subdivide_depth: usize,
    /// Samples per warm-started work unit. Fixed, so results do not depend
    /// on the number of workers.
    pub chunk: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            root_tolerance: 1e-10,
            max_root_iterations: 200,
            max_flagged_fraction: 0.05,
            chunk: 16,
            subdivide_depth: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Parameterization {
    CartesianGrid,
    Circle { g: f64 },
}

/// A refined sector crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub h: Complex64,
    /// Polar angle in (0, 2π] for circle scans.
    pub theta: Option<f64>,
    /// Ground-state sector before and after the zero along the scan path.
    pub sectors: [SectorLabel; 2],
    /// `|Re(E_a) − Re(E_b)|` at `h`.
    pub residual: f64,
    pub converged: bool,
}

impl Zero {
    /// `e^{iθ}` for circle zeros.
    pub fn fugacity(&self) -> Option<Complex64> {
        self.theta.map(|t| Complex64::from_polar(1.0, t))
    }
}

/// A bracket that could not be refined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedInterval {
    /// Start and end of the bracket as field values.
    pub from: Complex64,
    pub to: Complex64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub parameterization: Parameterization,
    pub zeros: Vec<Zero>,
    #[serde(default)]
    pub flagged: Vec<FlaggedInterval>,
}

impl ZeroSet {
    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// Largest refinement residual over all zeros.
    pub fn max_residual(&self) -> f64 {
        self.zeros.iter().map(|z| z.residual).fold(0.0, f64::max)
    }
}
