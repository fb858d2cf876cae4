use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dense::{dense_eig, DEFAULT_DENSE_CAP};
use super::krylov::{krylov_ground, KrylovConfig};
use super::EigenPair;
use crate::error::{CrossingReport, Error, Result};
use crate::model::{embed_sector_vector, sector_operator, ComplexField, ModelSpec, SectorBasis, SectorLabel, SectorOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Hard limit for dense diagonalisation.
    pub dense_cap: usize,
    /// Blocks up to this dimension are solved densely, larger ones by Krylov.
    pub dense_threshold: usize,
    pub dense_tie_tolerance: f64,
    pub krylov_tie_tolerance: f64,
    pub krylov: KrylovConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dense_cap: DEFAULT_DENSE_CAP,
            dense_threshold: 128,
            dense_tie_tolerance: 1e-12,
            krylov_tie_tolerance: 1e-9,
            krylov: KrylovConfig::default(),
        }
    }
}

impl SolverConfig {
    /// Forces dense diagonalisation wherever the cap allows it.
    pub fn dense() -> Self {
        SolverConfig {
            dense_threshold: DEFAULT_DENSE_CAP,
            ..Self::default()
        }
    }

    /// Forces Krylov for every block.
    pub fn krylov() -> Self {
        SolverConfig {
            dense_threshold: 0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub method: Method,
    pub dim: usize,
    pub matvecs: usize,
    pub restarts: usize,
    pub residual: f64,
    pub degenerate: bool,
    pub verification: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateResult {
    pub sector: SectorLabel,
    /// The eigenvector is expressed in the sector basis.
    pub pair: EigenPair,
    pub spec_hash: String,
    pub diagnostics: SolverDiagnostics,
}

impl GroundStateResult {
    pub fn energy(&self) -> Complex64 {
        self.pair.energy
    }

    /// The eigenvector in the full computational basis.
    pub fn embedded(&self, basis: &SectorBasis) -> Result<Vec<Complex64>> {
        embed_sector_vector(basis, &self.pair.vector)
    }

    /// `|⟨ψ|φ⟩|`; zero across sectors, which are exactly orthogonal.
    pub fn fidelity(&self, other: &GroundStateResult) -> Result<f64> {
        if self.sector != other.sector {
            return Ok(0.0);
        }
        Ok(super::overlap(&self.pair.vector, &other.pair.vector)?.norm())
    }
}

/// SHA-256 of the canonical JSON of `(spec, h)`, hex encoded.
pub fn spec_hash(spec: &ModelSpec, h: ComplexField) -> String {
    let json = serde_json::to_string(&(spec, h)).expect("spec serialises");
    Sha256::digest(json.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct Block {
    basis: SectorBasis,
    op: SectorOperator,
    /// Per row: diagonal coupling entry and absolute off-diagonal row sum.
    gershgorin: Vec<(f64, f64)>,
}

impl Block {
    fn new(spec: &ModelSpec, q: SectorLabel) -> Result<Self> {
        let (basis, op) = sector_operator(spec, q)?;
        let gershgorin = (0..op.dim())
            .map(|r| {
                let mut diag = 0.0;
                let mut off = 0.0;
                for k in op.row_ptr[r]..op.row_ptr[r + 1] {
                    if op.cols[k] as usize == r {
                        diag += op.coupling[k];
                    } else {
                        off += op.coupling[k].abs();
                    }
                }
                (diag, off)
            })
            .collect();
        Ok(Block { basis, op, gershgorin })
    }

    /// Upper bound on `Re(λ)` over the spectrum at field `h`.
    fn shift(&self, h: Complex64) -> f64 {
        self.gershgorin
            .iter()
            .zip(&self.op.field_diag)
            .map(|(&(d, off), &f)| d + h.re * f + off)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Sector-resolved ground-state solver for one model. Sector blocks are built
/// on first use and shared read-only afterwards.
pub struct EdSolver {
    spec: ModelSpec,
    config: SolverConfig,
    blocks: Vec<OnceLock<Result<Block, String>>>,
}

impl EdSolver {
    pub fn new(spec: &ModelSpec, config: SolverConfig) -> Result<Self> {
        spec.validate()?;
        spec.dimension()?;
        Ok(EdSolver {
            spec: *spec,
            config,
            blocks: spec.sectors().iter().map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn block(&self, q: SectorLabel) -> Result<&Block> {
        q.check_for(&self.spec)?;
        self.blocks[q.0 as usize]
            .get_or_init(|| Block::new(&self.spec, q).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Validation(e.clone()))
    }

    pub fn basis(&self, q: SectorLabel) -> Result<&SectorBasis> {
        Ok(&self.block(q)?.basis)
    }

    pub fn sector_dim(&self, q: SectorLabel) -> Result<usize> {
        Ok(self.block(q)?.op.dim())
    }

    pub fn sector_operator(&self, q: SectorLabel) -> Result<&SectorOperator> {
        Ok(&self.block(q)?.op)
    }

    fn method_for(&self, dim: usize) -> Method {
        if dim <= self.config.dense_threshold.min(self.config.dense_cap) {
            Method::Dense
        } else {
            Method::Krylov
        }
    }

    pub fn sector_ground(&self, h: ComplexField, q: SectorLabel) -> Result<GroundStateResult> {
        self.sector_ground_from(h, q, None)
    }

    /// As [`EdSolver::sector_ground`], warm-starting Krylov from `start`.
    pub fn sector_ground_from(
        &self,
        h: ComplexField,
        q: SectorLabel,
        start: Option<&[Complex64]>,
    ) -> Result<GroundStateResult> {
        let block = self.block(q)?;
        let dim = block.op.dim();
        let hv = h.value();
        let (pair, diagnostics) = match self.method_for(dim) {
            Method::Dense => {
                let pairs = dense_eig(&block.op.to_sparse(hv), self.config.dense_cap)?;
                let degenerate = pairs
                    .get(1)
                    .is_some_and(|p| (p.energy.re - pairs[0].energy.re).abs() < self.config.dense_tie_tolerance);
                let pair = pairs.into_iter().next().ok_or_else(|| Error::Solver("empty sector".into()))?;
                let diag = SolverDiagnostics {
                    method: Method::Dense,
                    dim,
                    matvecs: 0,
                    restarts: 0,
                    residual: pair.residual,
                    degenerate,
                    verification: None,
                };
                (pair, diag)
            }
            Method::Krylov => {
                let mut kc = self.config.krylov;
                if kc.shift.is_none() {
                    kc.shift = Some(block.shift(hv));
                }
                let (pair, kd) = krylov_ground(&block.op.at(hv), &kc, start)?;
                let diag = SolverDiagnostics {
                    method: Method::Krylov,
                    dim,
                    matvecs: kd.matvecs,
                    restarts: kd.restarts,
                    residual: kd.residual,
                    degenerate: kd.degenerate,
                    verification: kd.verification,
                };
                (pair, diag)
            }
        };
        if diagnostics.degenerate {
            log::warn!("degenerate ground state in sector {q} at h = {hv}");
        }
        Ok(GroundStateResult {
            sector: q,
            pair,
            spec_hash: spec_hash(&self.spec, h),
            diagnostics,
        })
    }

    /// Ground states of both competing sectors, in sector order.
    pub fn competing_grounds(
        &self,
        h: ComplexField,
        starts: [Option<&[Complex64]>; 2],
    ) -> Result<[GroundStateResult; 2]> {
        let [a, b] = self.spec.competing_sectors();
        Ok([
            self.sector_ground_from(h, a, starts[0])?,
            self.sector_ground_from(h, b, starts[1])?,
        ])
    }

    fn tie_tolerance(&self, a: &GroundStateResult, b: &GroundStateResult) -> f64 {
        if a.diagnostics.method == Method::Krylov || b.diagnostics.method == Method::Krylov {
            self.config.krylov_tie_tolerance
        } else {
            self.config.dense_tie_tolerance
        }
    }

    /// The lower-`Re(E)` of the competing sector grounds; a tie is a crossing.
    pub fn global_ground(&self, h: ComplexField) -> Result<GroundStateResult> {
        let [a, b] = self.competing_grounds(h, [None, None])?;
        self.select(h, a, b)
    }

    pub(crate) fn select(
        &self,
        h: ComplexField,
        a: GroundStateResult,
        b: GroundStateResult,
    ) -> Result<GroundStateResult> {
        let gap = a.energy().re - b.energy().re;
        if gap.abs() <= self.tie_tolerance(&a, &b) {
            return Err(Error::Crossing(CrossingReport {
                field: h.value(),
                sectors: (a.sector, b.sector),
                energies: (a.energy(), b.energy()),
                gap: gap.abs(),
            }));
        }
        Ok(if gap < 0.0 { a } else { b })
    }
}

/// Ground state of sector `q` with the default solver configuration.
pub fn sector_ground(spec: &ModelSpec, h: ComplexField, q: SectorLabel) -> Result<GroundStateResult> {
    EdSolver::new(spec, SolverConfig::default())?.sector_ground(h, q)
}

/// Minimal-`Re(E)` ground state over the competing sectors (q = 2 of the
/// clock chain is projected out).
pub fn global_ground(spec: &ModelSpec, h: ComplexField) -> Result<GroundStateResult> {
    EdSolver::new(spec, SolverConfig::default())?.global_ground(h)
}
