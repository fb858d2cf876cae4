//! Closed-form solution of the non-Hermitian XY chain
//! `H = -J Σ [(1+γ)/2 σˣσˣ + (1-γ)/2 σʸσʸ] - h Σ σᶻ` with periodic boundaries.
//!
//! After Jordan-Wigner and Fourier transformation each pair of momenta
//! `(k, −k)` decouples into a 2×2 block diagonalised by a complex Bogoliubov
//! angle θ_k with `cos 2θ_k = (h − cos k)/ε_k`, `sin 2θ_k = γ sin k/ε_k` and
//! `ε_k = √((cos k − h)² + γ² sin² k)` on the principal branch.
//!
//! The spin parity `∏σᶻ = +1` sector has an even fermion number and
//! antiperiodic fermions (half-integer momenta `±(2n−1)π/L`); the odd sector
//! has periodic fermions (integer momenta `2nπ/L`), where the unpaired modes
//! `k = 0` and `k = π` add a constant `−2J` to the ground energy.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CrossingReport, Error, Result};
use crate::model::{Couplings, ModelSpec, SectorLabel};

/// Modes with `|ε_k|` below this are exceptional points.
pub const EXCEPTIONAL_RADIUS: f64 = 1e-10;
/// Two sectors closer than this in `Re(E)` are reported as a crossing.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Fermion-number parity; `Even` is the spin sector `∏σᶻ = +1` (q = 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FermionParity {
    Even,
    Odd,
}

impl FermionParity {
    pub fn sector(self) -> SectorLabel {
        match self {
            FermionParity::Even => SectorLabel(0),
            FermionParity::Odd => SectorLabel(1),
        }
    }

    pub fn from_sector(q: SectorLabel) -> Result<Self> {
        match q.0 {
            0 => Ok(FermionParity::Even),
            1 => Ok(FermionParity::Odd),
            other => Err(Error::validation(format!("no fermion parity for sector q = {other}"))),
        }
    }

    pub fn both() -> [FermionParity; 2] {
        [FermionParity::Even, FermionParity::Odd]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    /// `k = ±(2n−1)π/L`, n = 1..L/2.
    HalfInteger,
    /// `k = 2nπ/L`, n = −L/2+1..L/2.
    Integer,
}

/// Which momentum grid belongs to which fermion parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GridConvention {
    /// Even parity on the half-integer grid; odd parity on the integer grid
    /// with the unpaired-mode constant. Agrees with exact diagonalisation.
    #[default]
    Standard,
    /// Even parity on the integer grid, odd on the half-integer grid, and the
    /// bare `−2Σ_{k>0} ε_k` energy on both. Kept as a comparison point only.
    Swapped,
}

impl GridConvention {
    pub fn grid_kind(self, parity: FermionParity) -> GridKind {
        match (self, parity) {
            (GridConvention::Standard, FermionParity::Even) => GridKind::HalfInteger,
            (GridConvention::Standard, FermionParity::Odd) => GridKind::Integer,
            (GridConvention::Swapped, FermionParity::Even) => GridKind::Integer,
            (GridConvention::Swapped, FermionParity::Odd) => GridKind::HalfInteger,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    pub length: usize,
    pub parity: FermionParity,
    pub kind: GridKind,
    /// Ascending, in (−π, π].
    pub k_values: Vec<f64>,
    /// `k = numerator·π/L`; kept exact so that pairing never depends on
    /// rounding near `k = π`.
    pub numerators: Vec<i64>,
}

impl MomentumGrid {
    /// Momenta in (0, π): one representative per `(k, −k)` pair.
    pub fn paired(&self) -> impl Iterator<Item = f64> + '_ {
        let l = self.length as i64;
        self.k_values
            .iter()
            .zip(&self.numerators)
            .filter(move |&(_, &m)| m > 0 && m < l)
            .map(|(&k, _)| k)
    }
}

fn check_length(length: usize) -> Result<()> {
    if length % 2 == 1 {
        return Err(Error::UnsupportedLength(length));
    }
    if length < 4 {
        return Err(Error::validation(format!("free-fermion grids need L >= 4, got {length}")));
    }
    Ok(())
}

pub fn momentum_grid(length: usize, parity: FermionParity) -> Result<MomentumGrid> {
    momentum_grid_with(length, parity, GridConvention::Standard)
}

pub fn momentum_grid_with(
    length: usize,
    parity: FermionParity,
    convention: GridConvention,
) -> Result<MomentumGrid> {
    check_length(length)?;
    let l = length as f64;
    let kind = convention.grid_kind(parity);
    let n = length as i64;
    let numerators: Vec<i64> = match kind {
        GridKind::Integer => (-n / 2 + 1..=n / 2).map(|j| 2 * j).collect(),
        GridKind::HalfInteger => (-n / 2 + 1..=n / 2).map(|j| 2 * j - 1).collect(),
    };
    let k_values = numerators
        .iter()
        .map(|&m| if m == n { PI } else { m as f64 * PI / l })
        .collect();
    Ok(MomentumGrid {
        length,
        parity,
        kind,
        k_values,
        numerators,
    })
}

/// One Bogoliubov-diagonalised momentum pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovMode {
    pub k: f64,
    pub epsilon: Complex64,
    pub cos_theta: Complex64,
    pub sin_theta: Complex64,
}

impl BogoliubovMode {
    fn norm_sqr(&self) -> f64 {
        self.cos_theta.norm_sqr() + self.sin_theta.norm_sqr()
    }

    /// `conj(cos θ′) cos θ + conj(sin θ′) sin θ`: overlap of the pair states.
    fn raw_overlap(&self, other: &BogoliubovMode) -> Complex64 {
        other.cos_theta.conj() * self.cos_theta + other.sin_theta.conj() * self.sin_theta
    }
}

#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Principal,
    /// Negated square root; only used to check that the oracle suite notices.
    Flipped,
}

/// `ε_k` on the principal branch (`Re ε ≥ 0`).
pub fn dispersion(k: f64, h: Complex64, gamma: f64) -> Result<Complex64> {
    dispersion_on(k, h, gamma, Branch::Principal)
}

fn dispersion_on(k: f64, h: Complex64, gamma: f64, branch: Branch) -> Result<Complex64> {
    let (s, c) = k.sin_cos();
    // Factored so that ε vanishes exactly at h = cos k ± iγ sin k.
    let i_gs = Complex64::new(0.0, gamma * s);
    let z = (c - h - i_gs) * (c - h + i_gs);
    let eps = z.sqrt();
    if eps.norm() < EXCEPTIONAL_RADIUS {
        return Err(Error::ExceptionalPoint {
            k,
            magnitude: eps.norm(),
        });
    }
    Ok(match branch {
        Branch::Principal => eps,
        Branch::Flipped => -eps,
    })
}

/// Half-angle values `(cos θ_k, sin θ_k)` with `sin 2θ_k = γ sin k / ε_k`.
pub fn bogoliubov_angles(k: f64, h: Complex64, gamma: f64) -> Result<(Complex64, Complex64)> {
    let mode = mode_on(k, h, gamma, Branch::Principal)?;
    Ok((mode.cos_theta, mode.sin_theta))
}

fn mode_on(k: f64, h: Complex64, gamma: f64, branch: Branch) -> Result<BogoliubovMode> {
    let eps = dispersion_on(k, h, gamma, branch)?;
    let (s, c) = k.sin_cos();
    let cos2 = (h - c) / eps;
    let sin2 = gamma * s / eps;
    let one = Complex64::new(1.0, 0.0);
    let cos_theta = ((one + cos2) / 2.0).sqrt();
    let sin_theta = if cos_theta.norm() > 1e-8 {
        sin2 / (2.0 * cos_theta)
    } else {
        let root = ((one - cos2) / 2.0).sqrt();
        if (root * sin2.conj()).re >= 0.0 {
            root
        } else {
            -root
        }
    };
    Ok(BogoliubovMode {
        k,
        epsilon: eps,
        cos_theta,
        sin_theta,
    })
}

/// Ground state of one fermion-parity sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XySectorGround {
    pub parity: FermionParity,
    pub energy: Complex64,
    pub modes: Vec<BogoliubovMode>,
}

/// XY chain of even length `L`, solved mode by mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyChain {
    pub length: usize,
    pub gamma: f64,
    pub coupling: f64,
    pub convention: GridConvention,
    branch: Branch,
}

impl XyChain {
    pub fn new(length: usize, gamma: f64) -> Result<Self> {
        check_length(length)?;
        Ok(XyChain {
            length,
            gamma,
            coupling: 1.0,
            convention: GridConvention::Standard,
            branch: Branch::Principal,
        })
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        match spec.couplings {
            Couplings::Xy { j, gamma } if j > 0.0 => {
                let mut chain = XyChain::new(spec.length, gamma)?;
                chain.coupling = j;
                Ok(chain)
            }
            Couplings::Xy { .. } => Err(Error::validation("free-fermion path assumes J > 0")),
            _ => Err(Error::validation(format!("{} is not an XY chain", spec.kind))),
        }
    }

    pub fn with_convention(mut self, convention: GridConvention) -> Self {
        self.convention = convention;
        self
    }

    #[doc(hidden)]
    pub fn with_branch(mut self, branch: Branch) -> Self {
        self.branch = branch;
        self
    }

    pub fn grid(&self, parity: FermionParity) -> MomentumGrid {
        momentum_grid_with(self.length, parity, self.convention).expect("length checked on construction")
    }

    /// Field in units of the coupling; `H(h) = J·H₁(h/J)`.
    fn reduced(&self, h: Complex64) -> Complex64 {
        h / self.coupling
    }

    pub fn modes(&self, h: Complex64, parity: FermionParity) -> Result<Vec<BogoliubovMode>> {
        let h = self.reduced(h);
        self.grid(parity)
            .paired()
            .map(|k| mode_on(k, h, self.gamma, self.branch))
            .collect()
    }

    pub fn sector_ground(&self, h: Complex64, parity: FermionParity) -> Result<XySectorGround> {
        let modes = self.modes(h, parity)?;
        let paired: Complex64 = modes.iter().map(|m| -2.0 * m.epsilon).sum();
        let energy = match (self.convention, self.convention.grid_kind(parity)) {
            (GridConvention::Standard, GridKind::Integer) => {
                // Odd parity leaves exactly one of the unpaired k = 0, π
                // modes filled; k = 0 is lower by 4J in Re(E) for every h.
                paired - 2.0
            }
            (GridConvention::Standard, GridKind::HalfInteger) => paired,
            (GridConvention::Swapped, kind) => {
                let mut e = paired;
                if kind == GridKind::Integer {
                    e -= 2.0 * dispersion_on(PI, self.reduced(h), self.gamma, self.branch)?;
                }
                e
            }
        };
        Ok(XySectorGround {
            parity,
            energy: energy * self.coupling,
            modes,
        })
    }

    pub fn ground_energy(&self, h: Complex64, parity: FermionParity) -> Result<Complex64> {
        Ok(self.sector_ground(h, parity)?.energy)
    }

    /// Both sectors, returning the one with the lower `Re(E)`. A tie within
    /// [`TIE_TOLERANCE`] is a crossing and is reported as an error.
    pub fn ground(&self, h: Complex64) -> Result<XySectorGround> {
        let even = self.sector_ground(h, FermionParity::Even)?;
        let odd = self.sector_ground(h, FermionParity::Odd)?;
        let gap = even.energy.re - odd.energy.re;
        if gap.abs() <= TIE_TOLERANCE {
            return Err(Error::Crossing(CrossingReport {
                field: h,
                sectors: (even.parity.sector(), odd.parity.sector()),
                energies: (even.energy, odd.energy),
                gap: gap.abs(),
            }));
        }
        Ok(if gap < 0.0 { even } else { odd })
    }

    /// Normalised fidelity between the ground states of one parity sector.
    pub fn sector_fidelity(&self, h: Complex64, h_prime: Complex64, parity: FermionParity) -> Result<f64> {
        let a = self.modes(h, parity)?;
        let b = self.modes(h_prime, parity)?;
        Ok(mode_fidelity(&a, &b))
    }

    /// Unnormalised product `∏ |conj(cos θ′) cos θ + conj(sin θ′) sin θ|`.
    pub fn raw_sector_fidelity(
        &self,
        h: Complex64,
        h_prime: Complex64,
        parity: FermionParity,
    ) -> Result<f64> {
        let a = self.modes(h, parity)?;
        let b = self.modes(h_prime, parity)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x.raw_overlap(y).norm()).product())
    }

    /// Fidelity between the global ground states at `h` and `h′`; zero when
    /// they sit in different parity sectors.
    pub fn fidelity(&self, h: Complex64, h_prime: Complex64) -> Result<f64> {
        let a = self.ground(h)?;
        let b = self.ground(h_prime)?;
        if a.parity != b.parity {
            return Ok(0.0);
        }
        Ok(mode_fidelity(&a.modes, &b.modes))
    }
}

/// Normalised overlap modulus of two mode products on the same grid.
pub fn mode_fidelity(a: &[BogoliubovMode], b: &[BogoliubovMode]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| x.raw_overlap(y).norm() / (x.norm_sqr() * y.norm_sqr()).sqrt())
        .product()
}

/// Ground energy of one parity sector for the `J = 1` chain.
pub fn ground_energy(length: usize, h: Complex64, gamma: f64, parity: FermionParity) -> Result<Complex64> {
    XyChain::new(length, gamma)?.ground_energy(h, parity)
}

/// Fidelity between global ground states of the `J = 1` chain.
pub fn fidelity(length: usize, h: Complex64, h_prime: Complex64, gamma: f64) -> Result<f64> {
    XyChain::new(length, gamma)?.fidelity(h, h_prime)
}
