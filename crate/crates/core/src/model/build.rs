//! Term-by-term operator assembly.
//!
//! Every Hamiltonian is a list of local terms that act on integer basis
//! states; sparse matrices are assembled from the resulting triplets.
//! Spin chains with the field along x are handled in the Hadamard-rotated
//! frame, where the parity `∏σˣ` becomes the diagonal `∏σᶻ`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operator::{LinearOperator, SectorOperator, SparseOperator};
use super::{ComplexField, Couplings, FieldAxis, ModelSpec, SectorLabel};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Basis in which a sector decomposition is diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// The σᶻ (or clock-state) product basis.
    Computational,
    /// Every spin rotated by a Hadamard gate, exchanging σˣ and σᶻ.
    Hadamard,
}

impl Frame {
    pub fn for_spec(spec: &ModelSpec) -> Self {
        if !spec.is_clock() && spec.field_axis == FieldAxis::X {
            Frame::Hadamard
        } else {
            Frame::Computational
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn in_frame(self, frame: Frame) -> Self {
        match (frame, self) {
            (Frame::Computational, p) => p,
            (Frame::Hadamard, Pauli::X) => Pauli::Z,
            (Frame::Hadamard, Pauli::Z) => Pauli::X,
            // HσʸH = -σʸ; only σʸσʸ products occur, so the sign cancels.
            (Frame::Hadamard, Pauli::Y) => Pauli::Y,
        }
    }

    fn act(self, bit: usize, state: usize) -> (usize, Complex64) {
        let down = (state >> bit) & 1 == 1;
        match self {
            Pauli::X => (state ^ (1 << bit), ONE),
            Pauli::Y => (
                state ^ (1 << bit),
                if down { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) },
            ),
            Pauli::Z => (state, if down { -ONE } else { ONE }),
        }
    }
}

#[derive(Debug, Clone)]
enum Term {
    /// `coef · Π σ^p_site`
    Pauli { coef: f64, ops: Vec<(usize, Pauli)> },
    /// `coef · (V†_b V_a + V†_a V_b)`
    ClockHop { a: usize, b: usize, coef: f64 },
    /// `coef · (U_site + U†_site)`
    ClockField { site: usize, coef: f64 },
}

/// Eigenvalues of `U + U†` on clock states 0, 1, 2.
const CLOCK_FIELD: [f64; 3] = [2.0, -1.0, -1.0];

impl Term {
    /// Calls `emit(target, amplitude)` for each nonzero `⟨target|T|state⟩`.
    fn act(&self, state: usize, pow3: &[usize], mut emit: impl FnMut(usize, Complex64)) {
        match self {
            Term::Pauli { coef, ops } => {
                let mut s = state;
                let mut amp = Complex64::new(*coef, 0.0);
                for &(site, p) in ops {
                    let (t, a) = p.act(site, s);
                    s = t;
                    amp *= a;
                }
                emit(s, amp);
            }
            Term::ClockHop { a, b, coef } => {
                let da = (state / pow3[*a]) % 3;
                let db = (state / pow3[*b]) % 3;
                // V lowers a clock state by one, V† raises it.
                let lowered_a = state - da * pow3[*a] + ((da + 2) % 3) * pow3[*a];
                let t1 = lowered_a - db * pow3[*b] + ((db + 1) % 3) * pow3[*b];
                emit(t1, Complex64::new(*coef, 0.0));
                let raised_a = state - da * pow3[*a] + ((da + 1) % 3) * pow3[*a];
                let t2 = raised_a - db * pow3[*b] + ((db + 2) % 3) * pow3[*b];
                emit(t2, Complex64::new(*coef, 0.0));
            }
            Term::ClockField { site, coef } => {
                let d = (state / pow3[*site]) % 3;
                emit(state, Complex64::new(coef * CLOCK_FIELD[d], 0.0));
            }
        }
    }
}

fn bonds(length: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..length).map(move |i| (i, (i + 1) % length))
}

fn pauli_pair(coef: f64, a: usize, b: usize, p: Pauli, frame: Frame) -> Term {
    let p = p.in_frame(frame);
    Term::Pauli {
        coef,
        ops: vec![(a, p), (b, p)],
    }
}

/// Field-independent part `H₀`.
fn coupling_terms(spec: &ModelSpec, frame: Frame) -> Vec<Term> {
    let mut terms = Vec::new();
    match spec.couplings {
        Couplings::Xy { j, gamma } => {
            for (a, b) in bonds(spec.length) {
                terms.push(pauli_pair(-j * (1.0 + gamma) / 2.0, a, b, Pauli::X, frame));
                terms.push(pauli_pair(-j * (1.0 - gamma) / 2.0, a, b, Pauli::Y, frame));
            }
        }
        Couplings::Spin { jx, jy, jz } => {
            for (a, b) in bonds(spec.length) {
                for (jc, p) in [(jx, Pauli::X), (jy, Pauli::Y), (jz, Pauli::Z)] {
                    // S = σ/2, so each bond carries J/4.
                    terms.push(pauli_pair(-jc / 4.0, a, b, p, frame));
                }
            }
        }
        Couplings::Clock { j } => {
            for (a, b) in bonds(spec.length) {
                terms.push(Term::ClockHop { a, b, coef: -j });
            }
        }
    }
    terms.retain(|t| match t {
        Term::Pauli { coef, .. } => *coef != 0.0,
        Term::ClockHop { coef, .. } => *coef != 0.0,
        Term::ClockField { .. } => true,
    });
    terms
}

/// Field operator `H₁`, so that `H(h) = H₀ + h·H₁`.
fn field_terms(spec: &ModelSpec, frame: Frame) -> Vec<Term> {
    let axis = match spec.field_axis {
        FieldAxis::X => Pauli::X,
        FieldAxis::Z => Pauli::Z,
    }
    .in_frame(frame);
    (0..spec.length)
        .map(|site| match spec.couplings {
            Couplings::Xy { .. } => Term::Pauli {
                coef: -1.0,
                ops: vec![(site, axis)],
            },
            Couplings::Spin { .. } => Term::Pauli {
                coef: -0.5,
                ops: vec![(site, axis)],
            },
            Couplings::Clock { .. } => Term::ClockField { site, coef: -1.0 },
        })
        .collect()
}

fn powers_of_three(length: usize) -> Vec<usize> {
    let mut p = Vec::with_capacity(length + 1);
    let mut v = 1usize;
    for _ in 0..=length {
        p.push(v);
        v = v.saturating_mul(3);
    }
    p
}

/// Full Hamiltonian `H(h)` in the computational basis.
pub fn build_hamiltonian(spec: &ModelSpec, h: ComplexField) -> Result<SparseOperator> {
    spec.validate()?;
    let dim = spec.dimension()?;
    let pow3 = powers_of_three(spec.length);
    let coupling = coupling_terms(spec, Frame::Computational);
    let field = field_terms(spec, Frame::Computational);
    let hv = h.value();
    let mut triplets = Vec::with_capacity(dim * (coupling.len() + 2));
    for s in 0..dim {
        for term in &coupling {
            term.act(s, &pow3, |t, amp| triplets.push((t, s, amp)));
        }
        for term in &field {
            term.act(s, &pow3, |t, amp| triplets.push((t, s, hv * amp)));
        }
    }
    Ok(SparseOperator::from_triplets(dim, triplets))
}

fn parity(state: usize) -> u8 {
    (state.count_ones() % 2) as u8
}

fn clock_charge(mut state: usize, length: usize) -> u8 {
    let mut sum = 0usize;
    for _ in 0..length {
        sum += state % 3;
        state /= 3;
    }
    (sum % 3) as u8
}

fn omega_power(m: u8) -> Complex64 {
    let s = 3f64.sqrt() / 2.0;
    match m % 3 {
        0 => ONE,
        1 => Complex64::new(-0.5, s),
        _ => Complex64::new(-0.5, -s),
    }
}

/// Global symmetry generator in the computational basis: `∏σᶻ`, `∏σˣ`, or
/// the clock charge `Q = ∏Uⱼ`.
pub fn build_symmetry_operator(spec: &ModelSpec) -> Result<SparseOperator> {
    spec.validate()?;
    let dim = spec.dimension()?;
    if spec.is_clock() {
        let diag: Vec<_> = (0..dim).map(|s| omega_power(clock_charge(s, spec.length))).collect();
        return Ok(SparseOperator::diagonal(&diag));
    }
    Ok(match spec.field_axis {
        FieldAxis::Z => {
            let diag: Vec<_> = (0..dim)
                .map(|s| if parity(s) == 0 { ONE } else { -ONE })
                .collect();
            SparseOperator::diagonal(&diag)
        }
        FieldAxis::X => {
            let mask = dim - 1;
            SparseOperator::from_triplets(dim, (0..dim).map(|s| (s ^ mask, s, ONE)).collect())
        }
    })
}

/// Sector projector `P_q` in the computational basis.
///
/// Spin chains: `(I + (−1)^q S)/2`. Clock chain: `(1/3) Σₘ ω^{−qm} Qᵐ`, whose
/// diagonal geometric sums are evaluated exactly as 0 or 1.
pub fn build_projector(spec: &ModelSpec, q: SectorLabel) -> Result<SparseOperator> {
    spec.validate()?;
    q.check_for(spec)?;
    let dim = spec.dimension()?;
    if spec.is_clock() {
        let diag: Vec<_> = (0..dim)
            .map(|s| if clock_charge(s, spec.length) == q.0 { ONE } else { ZERO })
            .collect();
        return Ok(SparseOperator::diagonal(&diag));
    }
    let sign = if q.0 == 0 { 1.0 } else { -1.0 };
    Ok(match spec.field_axis {
        FieldAxis::Z => {
            let diag: Vec<_> = (0..dim)
                .map(|s| if parity(s) == q.0 { ONE } else { ZERO })
                .collect();
            SparseOperator::diagonal(&diag)
        }
        FieldAxis::X => {
            let mask = dim - 1;
            let mut triplets = Vec::with_capacity(2 * dim);
            for s in 0..dim {
                triplets.push((s, s, Complex64::new(0.5, 0.0)));
                triplets.push((s ^ mask, s, Complex64::new(0.5 * sign, 0.0)));
            }
            SparseOperator::from_triplets(dim, triplets)
        }
    })
}

/// `I − P_excluded`; for the clock chain with q = 2 this is the projector
/// that removes the charged sector degenerate with q = 1.
pub fn build_composite_projector(spec: &ModelSpec, excluded: SectorLabel) -> Result<SparseOperator> {
    let p = build_projector(spec, excluded)?;
    SparseOperator::identity(p.dim()).sub(&p)
}

/// Basis states of one symmetry sector, in the frame where the symmetry is
/// diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    pub sector: SectorLabel,
    pub frame: Frame,
    pub full_dim: usize,
    pub states: Vec<usize>,
}

impl SectorBasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

pub fn sector_basis(spec: &ModelSpec, q: SectorLabel) -> Result<SectorBasis> {
    spec.validate()?;
    q.check_for(spec)?;
    let dim = spec.dimension()?;
    let states = if spec.is_clock() {
        (0..dim).filter(|&s| clock_charge(s, spec.length) == q.0).collect()
    } else {
        (0..dim).filter(|&s| parity(s) == q.0).collect()
    };
    Ok(SectorBasis {
        sector: q,
        frame: Frame::for_spec(spec),
        full_dim: dim,
        states,
    })
}

/// The Hamiltonian block of sector `q` as `H₀ + h·diag(d)`, in the frame
/// reported by [`sector_basis`].
pub fn sector_operator(spec: &ModelSpec, q: SectorLabel) -> Result<(SectorBasis, SectorOperator)> {
    let basis = sector_basis(spec, q)?;
    let frame = basis.frame;
    let pow3 = powers_of_three(spec.length);
    let coupling = coupling_terms(spec, frame);
    let field = field_terms(spec, frame);

    let mut position = vec![u32::MAX; basis.full_dim];
    for (i, &s) in basis.states.iter().enumerate() {
        position[s] = i as u32;
    }

    let n = basis.len();
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut cols = Vec::new();
    let mut coupling_vals = Vec::new();
    let mut field_diag = Vec::with_capacity(n);
    let mut row: Vec<(u32, f64)> = Vec::new();
    for &s in &basis.states {
        // H₀ is real symmetric, so column s doubles as row s.
        row.clear();
        for term in &coupling {
            term.act(s, &pow3, |t, amp| {
                debug_assert!(amp.im == 0.0);
                let j = position[t];
                debug_assert!(j != u32::MAX, "coupling term leaves the sector");
                row.push((j, amp.re));
            });
        }
        row.sort_by_key(|&(j, _)| j);
        let mut k = 0;
        while k < row.len() {
            let (j, mut v) = row[k];
            k += 1;
            while k < row.len() && row[k].0 == j {
                v += row[k].1;
                k += 1;
            }
            if v != 0.0 {
                cols.push(j);
                coupling_vals.push(v);
            }
        }
        row_ptr.push(cols.len());

        let mut d = 0.0;
        for term in &field {
            term.act(s, &pow3, |t, amp| {
                debug_assert_eq!(t, s, "field term must be diagonal in the sector frame");
                d += amp.re;
            });
        }
        field_diag.push(d);
    }
    Ok((
        basis,
        SectorOperator {
            row_ptr,
            cols,
            coupling: coupling_vals,
            field_diag,
        },
    ))
}

/// Normalised Walsh-Hadamard transform, `v ← H^{⊗L} v`. Self-inverse.
pub fn hadamard_transform(v: &mut [Complex64]) {
    let n = v.len();
    assert!(n.is_power_of_two(), "hadamard transform needs a power-of-two length");
    let mut half = 1;
    while half < n {
        for block in (0..n).step_by(2 * half) {
            for i in block..block + half {
                let a = v[i];
                let b = v[i + half];
                v[i] = (a + b) * FRAC_1_SQRT_2;
                v[i + half] = (a - b) * FRAC_1_SQRT_2;
            }
        }
        half *= 2;
    }
}

/// Lifts a sector vector into the full computational basis.
pub fn embed_sector_vector(basis: &SectorBasis, v: &[Complex64]) -> Result<Vec<Complex64>> {
    if v.len() != basis.len() {
        return Err(Error::DimensionMismatch(v.len(), basis.len()));
    }
    let mut full = vec![ZERO; basis.full_dim];
    for (&s, &x) in basis.states.iter().zip(v) {
        full[s] = x;
    }
    if basis.frame == Frame::Hadamard {
        hadamard_transform(&mut full);
    }
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_kron(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let (n, m) = (a.len(), b.len());
        let mut out = vec![vec![ZERO; n * m]; n * m];
        for i in 0..n {
            for j in 0..n {
                for k in 0..m {
                    for l in 0..m {
                        out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                    }
                }
            }
        }
        out
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Operator `op` on `site`, identity elsewhere; site 0 least significant.
    fn site_op(op: &[Vec<Complex64>], site: usize, length: usize) -> Vec<Vec<Complex64>> {
        let d = op.len();
        let id: Vec<Vec<Complex64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { ONE } else { ZERO }).collect())
            .collect();
        let mut m = vec![vec![ONE]];
        for j in 0..length {
            let factor = if j == site { op } else { &id[..] };
            m = dense_kron(factor, &m);
        }
        m
    }

    fn dense_mul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let n = a.len();
        let mut out = vec![vec![ZERO; n]; n];
        for i in 0..n {
            for k in 0..n {
                if a[i][k] != ZERO {
                    for j in 0..n {
                        out[i][j] += a[i][k] * b[k][j];
                    }
                }
            }
        }
        out
    }

    fn dense_axpy(acc: &mut [Vec<Complex64>], s: Complex64, m: &[Vec<Complex64>]) {
        for (ra, rm) in acc.iter_mut().zip(m) {
            for (x, y) in ra.iter_mut().zip(rm) {
                *x += s * y;
            }
        }
    }

    fn max_diff(a: &SparseOperator, b: &[Vec<Complex64>]) -> f64 {
        let d = a.to_dense();
        d.iter()
            .zip(b)
            .flat_map(|(r1, r2)| r1.iter().zip(r2).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    fn paulis() -> [Vec<Vec<Complex64>>; 3] {
        [
            vec![vec![ZERO, ONE], vec![ONE, ZERO]],
            vec![vec![ZERO, c(0.0, -1.0)], vec![c(0.0, 1.0), ZERO]],
            vec![vec![ONE, ZERO], vec![ZERO, -ONE]],
        ]
    }

    /// Kronecker-product reference for the spin chains.
    fn kron_spin_hamiltonian(length: usize, bond: [f64; 3], field: f64, axis: usize, h: Complex64) -> Vec<Vec<Complex64>> {
        let p = paulis();
        let dim = 1 << length;
        let mut m = vec![vec![ZERO; dim]; dim];
        for i in 0..length {
            let j = (i + 1) % length;
            for a in 0..3 {
                if bond[a] != 0.0 {
                    let t = dense_mul(&site_op(&p[a], i, length), &site_op(&p[a], j, length));
                    dense_axpy(&mut m, c(bond[a], 0.0), &t);
                }
            }
            dense_axpy(&mut m, h * field, &site_op(&p[axis], i, length));
        }
        m
    }

    #[test]
    fn xy_matches_kronecker_reference() {
        let h = c(0.4, 0.3);
        for &gamma in &[0.0, 0.5, 0.8, 1.0] {
            let spec = ModelSpec::xy(4, gamma);
            let op = build_hamiltonian(&spec, ComplexField(h)).unwrap();
            let reference = kron_spin_hamiltonian(4, [-(1.0 + gamma) / 2.0, -(1.0 - gamma) / 2.0, 0.0], -1.0, 2, h);
            assert!(max_diff(&op, &reference) < 1e-14);
        }
    }

    #[test]
    fn xy_at_gamma_one_is_transverse_ising() {
        let h = ComplexField::cartesian(0.7, -0.2);
        let xy = build_hamiltonian(&ModelSpec::xy(4, 1.0), h).unwrap();
        let ising = kron_spin_hamiltonian(4, [-1.0, 0.0, 0.0], -1.0, 2, h.value());
        assert_eq!(max_diff(&xy, &ising), 0.0);
    }

    #[test]
    fn xyz_matches_kronecker_reference() {
        let h = c(1.2, 0.5);
        let spec = ModelSpec::xyz(4, -1.0, -0.5, 4.0);
        let op = build_hamiltonian(&spec, ComplexField(h)).unwrap();
        let reference = kron_spin_hamiltonian(4, [0.25, 0.125, -1.0], -0.5, 0, h);
        assert!(max_diff(&op, &reference) < 1e-14);
    }

    #[test]
    fn clock_two_site_matches_kronecker_reference() {
        let w = omega_power(1);
        let v = vec![vec![ZERO, ONE, ZERO], vec![ZERO, ZERO, ONE], vec![ONE, ZERO, ZERO]];
        let u = vec![vec![ONE, ZERO, ZERO], vec![ZERO, w, ZERO], vec![ZERO, ZERO, w * w]];
        let dag = |m: &Vec<Vec<Complex64>>| -> Vec<Vec<Complex64>> {
            (0..3).map(|i| (0..3).map(|j| m[j][i].conj()).collect()).collect()
        };
        let h = c(0.3, 0.9);
        let length = 3;
        let mut reference = vec![vec![ZERO; 27]; 27];
        for i in 0..length {
            let j = (i + 1) % length;
            let t1 = dense_mul(&site_op(&dag(&v), j, length), &site_op(&v, i, length));
            let t2 = dense_mul(&site_op(&dag(&v), i, length), &site_op(&v, j, length));
            dense_axpy(&mut reference, -ONE, &t1);
            dense_axpy(&mut reference, -ONE, &t2);
            dense_axpy(&mut reference, -h, &site_op(&u, i, length));
            dense_axpy(&mut reference, -h, &site_op(&dag(&u), i, length));
        }
        let op = build_hamiltonian(&ModelSpec::clock3(length), ComplexField(h)).unwrap();
        assert!(max_diff(&op, &reference) < 1e-14);
    }

    #[test]
    fn real_field_gives_exactly_hermitian_matrix() {
        for spec in [ModelSpec::xy(5, 0.8), ModelSpec::xyz(5, 1.0, 0.3, 2.0), ModelSpec::clock3(4)] {
            let op = build_hamiltonian(&spec, ComplexField::cartesian(0.731, 0.0)).unwrap();
            let diff = op.sub(&op.adjoint()).unwrap();
            assert_eq!(diff.nnz(), 0, "{spec:?}");
            let op = build_hamiltonian(&spec, ComplexField::cartesian(0.731, 0.2)).unwrap();
            assert!(op.sub(&op.adjoint()).unwrap().max_abs() > 0.0);
        }
    }

    #[test]
    fn symmetry_operators() {
        let s = build_symmetry_operator(&ModelSpec::xy(4, 0.8)).unwrap();
        for (r, col, v) in s.entries() {
            assert_eq!(r, col);
            assert!(v == ONE || v == -ONE);
        }
        let sq = s.matmul(&s).unwrap();
        assert_eq!(sq, SparseOperator::identity(16));

        let q = build_symmetry_operator(&ModelSpec::clock3(3)).unwrap();
        let q3 = q.matmul(&q).unwrap().matmul(&q).unwrap();
        assert!(q3.sub(&SparseOperator::identity(27)).unwrap().max_abs() < 1e-14);

        let x = build_symmetry_operator(&ModelSpec::xxz(4, 1.0, 2.0)).unwrap();
        assert_eq!(x.matmul(&x).unwrap(), SparseOperator::identity(16));
    }

    #[test]
    fn clock_projector_traces() {
        let spec = ModelSpec::clock3(2);
        for q in 0..3 {
            let p = build_projector(&spec, SectorLabel(q)).unwrap();
            assert_eq!(p.trace(), c(3.0, 0.0));
        }
        let p_prime = build_composite_projector(&spec, SectorLabel(2)).unwrap();
        let p2 = build_projector(&spec, SectorLabel(2)).unwrap();
        assert_eq!(p_prime.matmul(&p2).unwrap().nnz(), 0);
        assert!(build_projector(&spec, SectorLabel(3)).is_err());
        assert!(build_projector(&ModelSpec::xy(4, 0.5), SectorLabel(2)).is_err());
    }

    #[test]
    fn spin_projector_completeness() {
        for spec in [ModelSpec::xy(4, 0.5), ModelSpec::xxz(4, -1.0, 4.0)] {
            let p0 = build_projector(&spec, SectorLabel(0)).unwrap();
            let p1 = build_projector(&spec, SectorLabel(1)).unwrap();
            assert_eq!((p0.trace() + p1.trace()).re, 16.0);
            assert_eq!(p0.add(&p1).unwrap(), SparseOperator::identity(16));
        }
    }

    #[test]
    fn sector_bases() {
        let b = sector_basis(&ModelSpec::clock3(3), SectorLabel(0)).unwrap();
        assert_eq!(b.len(), 9);
        let even = sector_basis(&ModelSpec::xy(2, 0.5), SectorLabel(0)).unwrap();
        assert_eq!(even.states, vec![0b00, 0b11]);
        for spec in [ModelSpec::clock3(4), ModelSpec::xyz(5, 1.0, 0.5, 2.0)] {
            let total: usize = spec
                .sectors()
                .into_iter()
                .map(|q| sector_basis(&spec, q).unwrap().len())
                .sum();
            assert_eq!(total, spec.dimension().unwrap());
        }
    }

    #[test]
    fn z_frame_sector_block_matches_restriction() {
        let h = c(0.6, 0.4);
        for spec in [ModelSpec::xy(5, 0.8), ModelSpec::clock3(4)] {
            let full = build_hamiltonian(&spec, ComplexField(h)).unwrap();
            for q in spec.sectors() {
                let (basis, block) = sector_operator(&spec, q).unwrap();
                assert_eq!(basis.frame, Frame::Computational);
                let restricted = full.restrict(&basis.states);
                let diff = block.to_sparse(h).sub(&restricted).unwrap();
                assert!(diff.max_abs() < 1e-14);
            }
        }
    }

    #[test]
    fn hadamard_frame_block_reproduces_full_action() {
        let h = c(0.9, -0.3);
        let spec = ModelSpec::xyz(4, -1.0, -0.5, 4.0);
        let full = build_hamiltonian(&spec, ComplexField(h)).unwrap();
        for q in spec.sectors() {
            let (basis, block) = sector_operator(&spec, q).unwrap();
            assert_eq!(basis.frame, Frame::Hadamard);
            let op = block.at(h);
            for i in 0..basis.len() {
                let mut e = vec![ZERO; basis.len()];
                e[i] = ONE;
                let mut he = vec![ZERO; basis.len()];
                op.apply(&e, &mut he);
                let lifted = embed_sector_vector(&basis, &e).unwrap();
                let mut full_out = vec![ZERO; 16];
                full.apply(&lifted, &mut full_out);
                let expected = embed_sector_vector(&basis, &he).unwrap();
                for (a, b) in full_out.iter().zip(&expected) {
                    assert!((a - b).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn hadamard_is_self_inverse() {
        let mut v: Vec<Complex64> = (0..8).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let orig = v.clone();
        hadamard_transform(&mut v);
        hadamard_transform(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
