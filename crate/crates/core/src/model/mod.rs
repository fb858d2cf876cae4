//! Model definitions for the spin-1/2 XY/XXZ/XYZ chains and the three-state
//! quantum clock chain, together with operator assembly.
//!
//! Basis states are integers: base 2 for spin chains (bit `j` set means site
//! `j` points down, i.e. σᶻ = −1) and base 3 for the clock chain (digit `j`
//! is the clock state `s_j`). Site 0 is the least significant digit.
//! Boundary conditions are always periodic.

mod build;
mod config;
mod operator;

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use build::{
    build_composite_projector, build_hamiltonian, build_projector, build_symmetry_operator,
    embed_sector_vector, hadamard_transform, sector_basis, sector_operator, Frame, SectorBasis,
};
pub use config::ModelFile;
pub use operator::{LinearOperator, SectorOperator, SparseOperator};

/// Largest Hilbert dimension addressable with 32-bit column indices.
pub const MAX_DIMENSION: u128 = u32::MAX as u128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    XY,
    XXZ,
    XYZ,
    Clock3,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::XY => "XY",
            ModelKind::XXZ => "XXZ",
            ModelKind::XYZ => "XYZ",
            ModelKind::Clock3 => "Clock3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldAxis {
    X,
    Z,
}

/// Coupling constants, in the convention of the chain they belong to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Couplings {
    /// `H = -J Σ [(1+γ)/2 σˣσˣ + (1-γ)/2 σʸσʸ] - h Σ σᶻ` (Pauli convention).
    Xy { j: f64, gamma: f64 },
    /// `H = -Σ (Jx SˣSˣ + Jy SʸSʸ + Jz SᶻSᶻ) - h Σ S^axis` with `S = σ/2`.
    Spin { jx: f64, jy: f64, jz: f64 },
    /// `H = -J Σ (V†ⱼ₊₁Vⱼ + h.c.) - h Σ (Uⱼ + U†ⱼ)`.
    Clock { j: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub length: usize,
    pub couplings: Couplings,
    pub field_axis: FieldAxis,
}

impl ModelSpec {
    /// Anisotropic XY chain with `J = 1` in a transverse field along z.
    pub fn xy(length: usize, gamma: f64) -> Self {
        ModelSpec {
            kind: ModelKind::XY,
            length,
            couplings: Couplings::Xy { j: 1.0, gamma },
            field_axis: FieldAxis::Z,
        }
    }

    /// XY chain from the spin-1/2 couplings: `J = (Jx+Jy)/4`, `γ = (Jx-Jy)/(Jx+Jy)`.
    pub fn xy_from_couplings(length: usize, jx: f64, jy: f64) -> Result<Self> {
        if jx + jy == 0.0 {
            return Err(Error::validation("XY requires Jx + Jy != 0"));
        }
        let spec = ModelSpec {
            kind: ModelKind::XY,
            length,
            couplings: Couplings::Xy {
                j: (jx + jy) / 4.0,
                gamma: (jx - jy) / (jx + jy),
            },
            field_axis: FieldAxis::Z,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn xxz(length: usize, jxy: f64, jz: f64) -> Self {
        ModelSpec {
            kind: ModelKind::XXZ,
            length,
            couplings: Couplings::Spin { jx: jxy, jy: jxy, jz },
            field_axis: FieldAxis::X,
        }
    }

    pub fn xyz(length: usize, jx: f64, jy: f64, jz: f64) -> Self {
        ModelSpec {
            kind: ModelKind::XYZ,
            length,
            couplings: Couplings::Spin { jx, jy, jz },
            field_axis: FieldAxis::X,
        }
    }

    pub fn clock3(length: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Clock3,
            length,
            couplings: Couplings::Clock { j: 1.0 },
            field_axis: FieldAxis::Z,
        }
    }

    pub fn with_field_axis(mut self, axis: FieldAxis) -> Self {
        self.field_axis = axis;
        self
    }

    pub fn is_clock(&self) -> bool {
        self.kind == ModelKind::Clock3
    }

    pub fn local_dim(&self) -> usize {
        if self.is_clock() {
            3
        } else {
            2
        }
    }

    /// Hilbert-space dimension without capacity checks.
    pub fn dimension_u128(&self) -> u128 {
        (self.local_dim() as u128).saturating_pow(self.length as u32)
    }

    pub fn dimension(&self) -> Result<usize> {
        let dim = self.dimension_u128();
        if dim > MAX_DIMENSION {
            return Err(Error::Capacity {
                requested: dim,
                capacity: MAX_DIMENSION,
            });
        }
        Ok(dim as usize)
    }

    /// XY anisotropy γ, if this is an XY chain.
    pub fn gamma(&self) -> Option<f64> {
        match self.couplings {
            Couplings::Xy { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    /// Symmetry sectors of the model: parity {0, 1} or clock charge {0, 1, 2}.
    pub fn sectors(&self) -> Vec<SectorLabel> {
        let n = if self.is_clock() { 3 } else { 2 };
        (0..n).map(SectorLabel).collect()
    }

    /// Sectors competing for the ground state. The clock chain drops q = 2,
    /// which is degenerate with q = 1 for every field.
    pub fn competing_sectors(&self) -> [SectorLabel; 2] {
        [SectorLabel(0), SectorLabel(1)]
    }

    /// Checks parameters. Hilbert-space capacity is checked separately by
    /// [`ModelSpec::dimension`] whenever a basis is built.
    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::validation(format!(
                "chain length must be at least 2, got {}",
                self.length
            )));
        }
        match (self.kind, self.couplings) {
            (ModelKind::XY, Couplings::Xy { j, gamma }) => {
                if self.field_axis != FieldAxis::Z {
                    return Err(Error::validation("XY chain takes its field along z"));
                }
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(Error::validation(format!("gamma must lie in [0, 1], got {gamma}")));
                }
                check_finite(&[j])?;
            }
            (ModelKind::XXZ, Couplings::Spin { jx, jy, jz }) => {
                if jx != jy {
                    return Err(Error::validation(format!("XXZ requires Jx == Jy, got {jx} and {jy}")));
                }
                check_finite(&[jx, jy, jz])?;
            }
            (ModelKind::XYZ, Couplings::Spin { jx, jy, jz }) => check_finite(&[jx, jy, jz])?,
            (ModelKind::Clock3, Couplings::Clock { j }) => check_finite(&[j])?,
            (kind, couplings) => {
                return Err(Error::validation(format!(
                    "{kind} cannot take couplings {couplings:?}"
                )))
            }
        }
        Ok(())
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::validation("couplings must be finite"))
    }
}

/// A complex external field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexField(pub Complex64);

impl ComplexField {
    pub fn cartesian(re: f64, im: f64) -> Self {
        ComplexField(Complex64::new(re, im))
    }

    /// `g·e^{iθ}`.
    pub fn polar(g: f64, theta: f64) -> Self {
        ComplexField(Complex64::from_polar(g, theta))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn modulus(self) -> f64 {
        self.0.norm()
    }

    /// Polar angle mapped into (0, 2π].
    pub fn angle(self) -> f64 {
        let a = self.0.arg();
        if a <= 0.0 {
            a + TAU
        } else {
            a
        }
    }

    pub fn is_real(self) -> bool {
        self.0.im == 0.0
    }
}

impl From<Complex64> for ComplexField {
    fn from(value: Complex64) -> Self {
        ComplexField(value)
    }
}

/// Symmetry-sector label: parity q ∈ {0, 1} (eigenvalue (−1)^q) for spin
/// chains, charge q ∈ {0, 1, 2} (eigenvalue ω^q) for the clock chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SectorLabel(pub u8);

impl SectorLabel {
    pub fn q(self) -> u8 {
        self.0
    }

    pub fn check_for(self, spec: &ModelSpec) -> Result<()> {
        let limit = if spec.is_clock() { 3 } else { 2 };
        if self.0 < limit {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "sector q = {} is not defined for {}",
                self.0, spec.kind
            )))
        }
    }
}

impl fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q={}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_and_cartesian_agree() {
        for &(g, theta) in &[(0.7, 0.3), (1.5, 2.0 * std::f64::consts::PI), (2.5, 4.0)] {
            let p = ComplexField::polar(g, theta);
            let c = ComplexField::cartesian(g * theta.cos(), g * theta.sin());
            assert!((p.value() - c.value()).norm() <= 1e-14);
        }
        let h = ComplexField::polar(1.0, TAU);
        assert!((h.angle() - TAU).abs() < 1e-12);
    }

    #[test]
    fn validation_rules() {
        assert!(ModelSpec::xy(4, 0.8).validate().is_ok());
        assert!(ModelSpec::xy(1, 0.8).validate().is_err());
        assert!(ModelSpec::xy(4, 1.2).validate().is_err());
        assert!(ModelSpec::xy(4, 0.8).with_field_axis(FieldAxis::X).validate().is_err());
        assert!(ModelSpec::xyz(4, 1.0, 0.5, 2.0).validate().is_ok());
        let bad = ModelSpec {
            couplings: Couplings::Spin { jx: 1.0, jy: 0.5, jz: 1.0 },
            ..ModelSpec::xxz(4, 1.0, 1.0)
        };
        assert!(bad.validate().is_err());
        let mixed = ModelSpec {
            couplings: Couplings::Clock { j: 1.0 },
            ..ModelSpec::xy(4, 0.5)
        };
        assert!(mixed.validate().is_err());
    }

    #[test]
    fn capacity_error_for_huge_chains() {
        // Parameters alone are fine; only building the basis overflows.
        assert!(ModelSpec::clock3(40).validate().is_ok());
        let err = ModelSpec::clock3(40).dimension().unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
        let err = super::build_hamiltonian(&ModelSpec::xy(40, 0.5), ComplexField::cartesian(0.1, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
        assert_eq!(ModelSpec::clock3(5).dimension().unwrap(), 243);
        assert_eq!(ModelSpec::xxz(6, 1.0, 1.0).dimension().unwrap(), 64);
    }

    #[test]
    fn xy_from_spin_couplings() {
        let spec = ModelSpec::xy_from_couplings(6, 1.8, 0.2).unwrap();
        match spec.couplings {
            Couplings::Xy { j, gamma } => {
                assert!((j - 0.5).abs() < 1e-15);
                assert!((gamma - 0.8).abs() < 1e-15);
            }
            _ => unreachable!(),
        }
    }
}
