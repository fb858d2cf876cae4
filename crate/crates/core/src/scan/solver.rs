use num_complex::Complex64;

use crate::ed::{overlap, EdSolver, SolverConfig};
use crate::error::{Error, Result};
use crate::free_fermion::{mode_fidelity, BogoliubovMode, FermionParity, XyChain};
use crate::model::{ComplexField, ModelKind, ModelSpec, SectorLabel};

/// Representation of a sector ground state sufficient for fidelities.
#[derive(Debug, Clone, PartialEq)]
pub enum StateData {
    /// Bogoliubov pair angles of the XY chain.
    Modes(Vec<BogoliubovMode>),
    /// Unit vector in the (field-independent) sector basis.
    Amplitudes(Vec<Complex64>),
    /// No state available; fidelities cannot be formed.
    Opaque,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorState {
    pub sector: SectorLabel,
    pub energy: Complex64,
    pub state: StateData,
}

/// Ground states of the two competing sectors at one field value.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorPair(pub [SectorState; 2]);

impl SectorPair {
    /// `Re(E_a) − Re(E_b)` for the sectors in their fixed order.
    pub fn gap(&self) -> f64 {
        self.0[0].energy.re - self.0[1].energy.re
    }

    /// The lower-`Re(E)` state (the first on an exact tie).
    pub fn ground(&self) -> &SectorState {
        if self.gap() <= 0.0 {
            &self.0[0]
        } else {
            &self.0[1]
        }
    }
}

/// Modulus of the overlap of two sector ground states. States from different
/// sectors are orthogonal.
pub fn state_fidelity(a: &SectorState, b: &SectorState) -> Result<f64> {
    if a.sector != b.sector {
        return Ok(0.0);
    }
    match (&a.state, &b.state) {
        (StateData::Modes(x), StateData::Modes(y)) if x.len() == y.len() => Ok(mode_fidelity(x, y)),
        (StateData::Amplitudes(x), StateData::Amplitudes(y)) => Ok(overlap(x, y)?.norm().min(1.0)),
        _ => Err(Error::validation("fidelity needs two states of the same representation")),
    }
}

/// Source of competing-sector ground states along a path in the field plane.
pub trait GroundSolver: Sync {
    fn spec(&self) -> &ModelSpec;

    /// Ground states of both competing sectors at `h`. `warm` is the result
    /// at a nearby field and may be used to accelerate the solve.
    fn solve(&self, h: Complex64, warm: Option<&SectorPair>) -> Result<SectorPair>;

    /// Ties in `Re(E)` closer than this are crossings.
    fn tie_tolerance(&self) -> f64 {
        1e-12
    }
}

/// Closed-form XY solver.
pub struct FreeFermionSolver {
    spec: ModelSpec,
    chain: XyChain,
}

impl FreeFermionSolver {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        Ok(FreeFermionSolver {
            spec: *spec,
            chain: XyChain::from_spec(spec)?,
        })
    }

    pub fn from_chain(spec: &ModelSpec, chain: XyChain) -> Self {
        FreeFermionSolver { spec: *spec, chain }
    }
}

impl GroundSolver for FreeFermionSolver {
    fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    fn solve(&self, h: Complex64, _warm: Option<&SectorPair>) -> Result<SectorPair> {
        let one = |parity: FermionParity| -> Result<SectorState> {
            let g = self.chain.sector_ground(h, parity)?;
            Ok(SectorState {
                sector: parity.sector(),
                energy: g.energy,
                state: StateData::Modes(g.modes),
            })
        };
        Ok(SectorPair([one(FermionParity::Even)?, one(FermionParity::Odd)?]))
    }
}

/// Sector-restricted exact diagonalisation.
pub struct EdGroundSolver {
    inner: EdSolver,
}

impl EdGroundSolver {
    pub fn new(spec: &ModelSpec, config: SolverConfig) -> Result<Self> {
        Ok(EdGroundSolver {
            inner: EdSolver::new(spec, config)?,
        })
    }

    pub fn inner(&self) -> &EdSolver {
        &self.inner
    }
}

impl GroundSolver for EdGroundSolver {
    fn spec(&self) -> &ModelSpec {
        self.inner.spec()
    }

    fn solve(&self, h: Complex64, warm: Option<&SectorPair>) -> Result<SectorPair> {
        let start = |i: usize| match warm.map(|w| &w.0[i].state) {
            Some(StateData::Amplitudes(v)) => Some(v.as_slice()),
            _ => None,
        };
        let [a, b] = self.inner.competing_grounds(ComplexField(h), [start(0), start(1)])?;
        let wrap = |g: crate::ed::GroundStateResult| SectorState {
            sector: g.sector,
            energy: g.pair.energy,
            state: StateData::Amplitudes(g.pair.vector),
        };
        Ok(SectorPair([wrap(a), wrap(b)]))
    }

    fn tie_tolerance(&self) -> f64 {
        let c = self.inner.config();
        if self.inner.sector_dim(SectorLabel(0)).unwrap_or(0) > c.dense_threshold.min(c.dense_cap) {
            c.krylov_tie_tolerance
        } else {
            c.dense_tie_tolerance
        }
    }
}

/// Which backend to use for a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Free fermions for XY chains, exact diagonalisation otherwise.
    #[default]
    Auto,
    FreeFermion,
    Ed,
}

pub fn solver_for(spec: &ModelSpec, backend: Backend, config: SolverConfig) -> Result<Box<dyn GroundSolver>> {
    let use_ff = match backend {
        Backend::Auto => spec.kind == ModelKind::XY && spec.length % 2 == 0 && spec.length >= 4,
        Backend::FreeFermion => true,
        Backend::Ed => false,
    };
    if use_ff {
        Ok(Box::new(FreeFermionSolver::new(spec)?))
    } else {
        Ok(Box::new(EdGroundSolver::new(spec, config)?))
    }
}
