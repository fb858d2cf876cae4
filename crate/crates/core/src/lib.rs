//! Fidelity-zero analysis of non-Hermitian quantum chains.
//!
//! A complex external field `h` lifts the degeneracy between symmetry
//! sectors of an ordered chain through the real parts of their ground
//! energies. Wherever the lowest-`Re(E)` sector changes, neighbouring ground
//! states are exactly orthogonal: a fidelity zero. This crate builds the
//! chains ([`model`]), solves them in closed form ([`free_fermion`]) or by
//! exact diagonalisation ([`ed`]), locates and classifies the zeros
//! ([`scan`]), extracts critical points by finite-size scaling ([`scaling`]),
//! and drives reproducible experiments ([`experiment`]).

pub mod ed;
pub mod error;
pub mod experiment;
pub mod free_fermion;
pub mod model;
pub mod scaling;
pub mod scan;

pub use error::{Error, Result};
pub use model::{ComplexField, ModelKind, ModelSpec, SectorLabel};
pub use num_complex::Complex64;
