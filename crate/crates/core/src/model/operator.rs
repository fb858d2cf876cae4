use num_complex::Complex64;

use crate::error::{Error, Result};

/// Anything that can act on a dense complex vector.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y ← A x`.
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

/// Complex sparse matrix in compressed-row form. Never stores exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    /// Assembles from unsorted triplets. Duplicates are summed in insertion
    /// order, so mirrored entries built from the same terms agree bitwise.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < dim && c < dim);
            if rows.last() == Some(&r) && cols.last() == Some(&(c as u32)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c as u32);
                vals.push(v);
            }
        }
        let mut kept_cols = Vec::with_capacity(cols.len());
        let mut kept_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != Complex64::new(0.0, 0.0) {
                row_ptr[r + 1] += 1;
                kept_cols.push(c);
                kept_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOperator {
            dim,
            row_ptr,
            cols: kept_cols,
            vals: kept_vals,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![Complex64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(diag: &[Complex64]) -> Self {
        Self::from_triplets(
            diag.len(),
            diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect(),
        )
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&(c as u32)) {
            Ok(i) => self.vals[span.start + i],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.entries().map(|(r, c, v)| (c, r, v.conj())).collect())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_triplets(self.dim, self.entries().map(|(r, c, v)| (r, c, v * s)).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_triplets(
            self.dim,
            self.entries().chain(other.entries()).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut triplets = Vec::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    triplets.push((r, c, a * b));
                }
            }
        }
        Ok(Self::from_triplets(self.dim, triplets))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut m = vec![vec![Complex64::new(0.0, 0.0); self.dim]; self.dim];
        for (r, c, v) in self.entries() {
            m[r][c] = v;
        }
        m
    }

    /// Principal submatrix on the given (sorted) basis indices.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mut position = vec![u32::MAX; self.dim];
        for (i, &s) in indices.iter().enumerate() {
            position[s] = i as u32;
        }
        let mut triplets = Vec::new();
        for (i, &s) in indices.iter().enumerate() {
            for (c, v) in self.row(s) {
                let j = position[c];
                if j != u32::MAX {
                    triplets.push((i, j as usize, v));
                }
            }
        }
        Self::from_triplets(indices.len(), triplets)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            *out = acc;
        }
    }
}

/// Field-parametrised Hamiltonian block `H(h) = H₀ + h·diag(d)` restricted to
/// one symmetry sector. `H₀` and `d` are real for every supported chain.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub(crate) row_ptr: Vec<usize>,
    pub(crate) cols: Vec<u32>,
    pub(crate) coupling: Vec<f64>,
    pub(crate) field_diag: Vec<f64>,
}

impl SectorOperator {
    pub fn dim(&self) -> usize {
        self.field_diag.len()
    }

    pub fn nnz(&self) -> usize {
        self.coupling.len() + self.field_diag.len()
    }

    /// The block evaluated at field `h`, as a lightweight operator view.
    pub fn at(&self, h: Complex64) -> FieldOperator<'_> {
        FieldOperator { block: self, h }
    }

    /// The block evaluated at field `h` as an explicit sparse matrix.
    pub fn to_sparse(&self, h: Complex64) -> SparseOperator {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.dim() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                triplets.push((r, self.cols[k] as usize, Complex64::new(self.coupling[k], 0.0)));
            }
            triplets.push((r, r, h * self.field_diag[r]));
        }
        SparseOperator::from_triplets(self.dim(), triplets)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FieldOperator<'a> {
    block: &'a SectorOperator,
    h: Complex64,
}

impl LinearOperator for FieldOperator<'_> {
    fn dim(&self) -> usize {
        self.block.dim()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let b = self.block;
        for (r, out) in y.iter_mut().enumerate() {
            let mut re = 0.0;
            let mut im = 0.0;
            for k in b.row_ptr[r]..b.row_ptr[r + 1] {
                let xv = x[b.cols[k] as usize];
                re += b.coupling[k] * xv.re;
                im += b.coupling[k] * xv.im;
            }
            *out = Complex64::new(re, im) + self.h * b.field_diag[r] * x[r];
        }
    }
}
